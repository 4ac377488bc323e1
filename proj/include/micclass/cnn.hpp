#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "micclass/matrix.hpp"

namespace micclass {

/// Row-major (batch, channels, height, width) tensor.
struct Tensor4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

  std::size_t plane() const { return h * w; }
  double* plane_ptr(std::size_t b, std::size_t ch) { return data.data() + (b * c + ch) * plane(); }
  const double* plane_ptr(std::size_t b, std::size_t ch) const {
    return data.data() + (b * c + ch) * plane();
  }
  double& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) {
    return data[((b * c + ch) * h + y) * w + x];
  }
  double at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return data[((b * c + ch) * h + y) * w + x];
  }
  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

Tensor4 tensor_from_image(const Matrix& image);
Matrix image_from_tensor(const Tensor4& t, std::size_t batch = 0);

/// 3x3 convolution (cross-correlation), stride 1, zero padding 1.
struct Conv2d {
  std::size_t in_ch = 0, out_ch = 0;
  std::vector<double> weight;  // out_ch x in_ch x 3 x 3
  std::vector<double> bias;    // out_ch

  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out)
      : in_ch(in), out_ch(out), weight(in * out * 9, 0.0), bias(out, 0.0) {}
  double& w(std::size_t co, std::size_t ci, std::size_t ky, std::size_t kx) {
    return weight[((co * in_ch + ci) * 3 + ky) * 3 + kx];
  }
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct Conv2dGrads {
  std::vector<double> weight;
  std::vector<double> bias;
};

Tensor4 conv2d_forward(const Tensor4& x, const Conv2d& layer);

/// Returns dL/dx and accumulates dL/dW, dL/db into grads (sized on first use).
Tensor4 conv2d_backward(const Tensor4& x, const Conv2d& layer, const Tensor4& grad_out,
                        Conv2dGrads& grads);

void relu_inplace(Tensor4& t);
// grad *= (activation > 0)
void relu_backward_inplace(const Tensor4& activation, Tensor4& grad);

/// Residual-learning denoiser: conv+ReLU stack, linear last layer.
struct DnCnnModel {
  int depth = 7;
  int width = 32;
  std::vector<Conv2d> layers;

  friend bool operator==(const DnCnnModel&, const DnCnnModel&) = default;
};

// He-normal weights, zero biases. depth >= 2.
DnCnnModel make_dncnn(int depth, int width, std::uint64_t seed);
// All-zero parameters; the residual is identically zero.
DnCnnModel make_zero_dncnn(int depth, int width);

/// Predicted noise residual F(v).
Tensor4 dncnn_forward(const DnCnnModel& model, const Tensor4& v);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Conv2dGrads> grads;  // one per layer
};

/// (1/N) sum (F(v) - (v - u))^2 with N the element count, plus gradients.
LossAndGrads residual_loss(const DnCnnModel& model, const Tensor4& v, const Tensor4& u);

struct TrainConfig {
  int patch_size = 40;            // 0 trains on whole images
  int patches_per_image = 8;
  int batch_size = 16;
  int epochs = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  double noise_sigma_min = 0.1;   // synthetic mode only
  double noise_sigma_max = 0.1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ImagePair {
  Matrix noisy;
  Matrix clean;
};

struct TrainResult {
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Clean images corrupted online with Gaussian noise of a per-patch sigma.
TrainResult train_synthetic(DnCnnModel& model, const std::vector<Matrix>& clean,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Aligned noisy/clean pairs (e.g. spectrogram images of the same clip).
TrainResult train_paired(DnCnnModel& model, const std::vector<ImagePair>& pairs,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// v - F(v), clamped to [0,1].
Matrix dncnn_denoise(const DnCnnModel& model, const Matrix& v);

}  // namespace micclass
