#pragma once

#include <string>
#include <vector>

#include "micclass/audio.hpp"
#include "micclass/matrix.hpp"

namespace micclass {

/// 10 log10(1 / MSE) for [0,1] images; +infinity for identical images.
double psnr(const Matrix& ideal, const Matrix& test);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Gaussian window weights, normalized to sum 1.
std::vector<double> ssim_window(const SsimParams& p);

/// Mean SSIM over every fully-contained window position.
double ssim(const Matrix& ideal, const Matrix& test, const SsimParams& p = {});

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<long>> counts;  // [truth][prediction]

  explicit ConfusionMatrix(std::vector<std::string> l = {});
  void add(std::size_t truth, std::size_t predicted, long n = 1);
  void add(const std::string& truth, const std::string& predicted);
  long total() const;
};

struct ClassificationMetrics {
  double mca = 0.0;              // percent
  double macro_precision = 0.0;  // [0,1]
  double macro_recall = 0.0;
  std::vector<double> precision;  // NaN where undefined
  std::vector<double> recall;
};

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

struct StftResolution {
  int n_fft = 512;
  int hop = 128;
  int win_length = 512;
};

struct StftLossConfig {
  std::vector<StftResolution> resolutions{{512, 128, 512}, {1024, 256, 1024}, {256, 64, 256}};
  double magnitude_floor = 1e-7;
};

struct StftLoss {
  std::vector<double> spectral_convergence;
  std::vector<double> log_magnitude;
  std::vector<double> stft;   // sc + mag per resolution
  double composite = 0.0;     // (1/T)(||u - u_hat||_1 + sum stft)
};

// |STFT| frames x (n_fft/2+1), Hann window of win_length, no padding.
Matrix stft_magnitude(const std::vector<double>& x, const StftResolution& r);

StftLoss stft_loss(const AudioClip& reference, const AudioClip& estimate, const StftLossConfig& cfg = {});

}  // namespace micclass
