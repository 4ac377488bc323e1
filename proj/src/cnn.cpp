#include "micclass/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "micclass/error.hpp"
#include "micclass/rng.hpp"

namespace micclass {

Tensor4 tensor_from_image(const Matrix& image) {
  Tensor4 t(1, 1, image.rows(), image.cols());
  std::copy(image.data().begin(), image.data().end(), t.data.begin());
  return t;
}

Matrix image_from_tensor(const Tensor4& t, std::size_t batch) {
  Matrix m(t.h, t.w);
  const double* p = t.plane_ptr(batch, 0);
  std::copy(p, p + t.plane(), m.data().begin());
  return m;
}

namespace {

struct Span1 {
  long lo, hi;  // output index range where the shifted input index is valid
};

Span1 valid_range(long n, long shift) { return {std::max(0L, -shift), std::min(n, n - shift)}; }

}  // namespace

Tensor4 conv2d_forward(const Tensor4& x, const Conv2d& layer) {
  if (x.c != layer.in_ch) {
    throw ModelError("conv2d: input has " + std::to_string(x.c) + " channels, layer expects " +
                     std::to_string(layer.in_ch));
  }
  const long H = static_cast<long>(x.h), W = static_cast<long>(x.w);
  Tensor4 y(x.n, layer.out_ch, x.h, x.w);
  const long jobs = static_cast<long>(x.n * layer.out_ch);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < jobs; ++job) {
    const std::size_t b = static_cast<std::size_t>(job) / layer.out_ch;
    const std::size_t co = static_cast<std::size_t>(job) % layer.out_ch;
    double* out = y.plane_ptr(b, co);
    std::fill(out, out + y.plane(), layer.bias[co]);
    for (std::size_t ci = 0; ci < layer.in_ch; ++ci) {
      const double* in = x.plane_ptr(b, ci);
      const double* k = &layer.weight[(co * layer.in_ch + ci) * 9];
      for (long ky = 0; ky < 3; ++ky) {
        const long dy = ky - 1;
        const Span1 ry = valid_range(H, dy);
        for (long yy = ry.lo; yy < ry.hi; ++yy) {
          double* orow = out + yy * W;
          const double* irow = in + (yy + dy) * W;
          const double k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
          // kx = 1 (no horizontal shift) covers the full row.
          for (long xx = 0; xx < W; ++xx) orow[xx] += k1 * irow[xx];
          for (long xx = 1; xx < W; ++xx) orow[xx] += k0 * irow[xx - 1];
          for (long xx = 0; xx < W - 1; ++xx) orow[xx] += k2 * irow[xx + 1];
        }
      }
    }
  }
  return y;
}

Tensor4 conv2d_backward(const Tensor4& x, const Conv2d& layer, const Tensor4& grad_out,
                        Conv2dGrads& grads) {
  if (x.c != layer.in_ch || grad_out.c != layer.out_ch || grad_out.n != x.n ||
      grad_out.h != x.h || grad_out.w != x.w) {
    throw ModelError("conv2d_backward: shape mismatch");
  }
  if (grads.weight.size() != layer.weight.size()) grads.weight.assign(layer.weight.size(), 0.0);
  if (grads.bias.size() != layer.bias.size()) grads.bias.assign(layer.bias.size(), 0.0);
  const long H = static_cast<long>(x.h), W = static_cast<long>(x.w);
  const std::size_t plane = x.plane();

  Tensor4 gin(x.n, x.c, x.h, x.w);
  const long in_jobs = static_cast<long>(x.n * layer.in_ch);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < in_jobs; ++job) {
    const std::size_t b = static_cast<std::size_t>(job) / layer.in_ch;
    const std::size_t ci = static_cast<std::size_t>(job) % layer.in_ch;
    double* gi = gin.plane_ptr(b, ci);
    for (std::size_t co = 0; co < layer.out_ch; ++co) {
      const double* go = grad_out.plane_ptr(b, co);
      const double* k = &layer.weight[(co * layer.in_ch + ci) * 9];
      for (long ky = 0; ky < 3; ++ky) {
        const long dy = ky - 1;
        const Span1 ry = valid_range(H, dy);
        const double k0 = k[ky * 3], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
        for (long yy = ry.lo; yy < ry.hi; ++yy) {
          const double* grow = go + yy * W;
          double* irow = gi + (yy + dy) * W;
          for (long xx = 0; xx < W; ++xx) irow[xx] += k1 * grow[xx];
          for (long xx = 1; xx < W; ++xx) irow[xx - 1] += k0 * grow[xx];
          for (long xx = 0; xx < W - 1; ++xx) irow[xx + 1] += k2 * grow[xx];
        }
      }
    }
  }

  const long w_jobs = static_cast<long>(layer.out_ch * layer.in_ch);
#pragma omp parallel for schedule(static)
  for (long job = 0; job < w_jobs; ++job) {
    const std::size_t co = static_cast<std::size_t>(job) / layer.in_ch;
    const std::size_t ci = static_cast<std::size_t>(job) % layer.in_ch;
    double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t b = 0; b < x.n; ++b) {
      const double* go = grad_out.plane_ptr(b, co);
      const double* in = x.plane_ptr(b, ci);
      for (long ky = 0; ky < 3; ++ky) {
        const long dy = ky - 1;
        const Span1 ry = valid_range(H, dy);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (long yy = ry.lo; yy < ry.hi; ++yy) {
          const double* grow = go + yy * W;
          const double* irow = in + (yy + dy) * W;
          for (long xx = 0; xx < W; ++xx) s1 += grow[xx] * irow[xx];
          for (long xx = 1; xx < W; ++xx) s0 += grow[xx] * irow[xx - 1];
          for (long xx = 0; xx < W - 1; ++xx) s2 += grow[xx] * irow[xx + 1];
        }
        acc[ky * 3] += s0;
        acc[ky * 3 + 1] += s1;
        acc[ky * 3 + 2] += s2;
      }
    }
    double* gw = &grads.weight[(co * layer.in_ch + ci) * 9];
    for (int t = 0; t < 9; ++t) gw[t] += acc[t];
  }

  for (std::size_t co = 0; co < layer.out_ch; ++co) {
    double s = 0.0;
    for (std::size_t b = 0; b < x.n; ++b) {
      const double* go = grad_out.plane_ptr(b, co);
      for (std::size_t p = 0; p < plane; ++p) s += go[p];
    }
    grads.bias[co] += s;
  }
  return gin;
}

void relu_inplace(Tensor4& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor4& activation, Tensor4& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (!(activation.data[i] > 0.0)) grad.data[i] = 0.0;
  }
}

DnCnnModel make_zero_dncnn(int depth, int width) {
  if (depth < 2 || width < 1) throw UsageError("dncnn: require depth >= 2 and width >= 1");
  DnCnnModel m;
  m.depth = depth;
  m.width = width;
  const auto w = static_cast<std::size_t>(width);
  m.layers.emplace_back(1, w);
  for (int i = 1; i < depth - 1; ++i) m.layers.emplace_back(w, w);
  m.layers.emplace_back(w, 1);
  return m;
}

DnCnnModel make_dncnn(int depth, int width, std::uint64_t seed) {
  DnCnnModel m = make_zero_dncnn(depth, width);
  Rng rng(seed);
  for (auto& layer : m.layers) {
    const double std = std::sqrt(2.0 / (9.0 * static_cast<double>(layer.in_ch)));
    for (double& v : layer.weight) v = std * rng.gaussian();
  }
  return m;
}

namespace {

std::vector<Tensor4> forward_cached(const DnCnnModel& model, const Tensor4& v) {
  if (v.c != 1) throw ModelError("dncnn: input must have one channel");
  std::vector<Tensor4> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(v);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Tensor4 z = conv2d_forward(acts.back(), model.layers[i]);
    if (i + 1 < model.layers.size()) relu_inplace(z);
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Tensor4 dncnn_forward(const DnCnnModel& model, const Tensor4& v) {
  if (v.c != 1) throw ModelError("dncnn: input must have one channel");
  Tensor4 cur = v;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    cur = conv2d_forward(cur, model.layers[i]);
    if (i + 1 < model.layers.size()) relu_inplace(cur);
  }
  return cur;
}

LossAndGrads residual_loss(const DnCnnModel& model, const Tensor4& v, const Tensor4& u) {
  if (!v.same_shape(u)) throw ModelError("residual_loss: shape mismatch");
  const auto acts = forward_cached(model, v);
  const Tensor4& pred = acts.back();
  const double count = static_cast<double>(v.data.size());
  LossAndGrads out;
  Tensor4 g(pred.n, pred.c, pred.h, pred.w);
  double loss = 0.0;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const double diff = pred.data[i] - (v.data[i] - u.data[i]);
    loss += diff * diff;
    g.data[i] = 2.0 * diff / count;
  }
  out.loss = loss / count;
  out.grads.resize(model.layers.size());
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    if (i + 1 < model.layers.size()) relu_backward_inplace(acts[i + 1], g);
    g = conv2d_backward(acts[i], model.layers[i], g, out.grads[i]);
  }
  return out;
}

namespace {

class Adam {
 public:
  Adam(const DnCnnModel& model, const TrainConfig& cfg) : cfg_(cfg) {
    for (const auto& l : model.layers) {
      m_.push_back({std::vector<double>(l.weight.size()), std::vector<double>(l.bias.size())});
      v_.push_back({std::vector<double>(l.weight.size()), std::vector<double>(l.bias.size())});
    }
  }

  void step(DnCnnModel& model, const std::vector<Conv2dGrads>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      update(model.layers[i].weight, grads[i].weight, m_[i].weight, v_[i].weight, c1, c2);
      update(model.layers[i].bias, grads[i].bias, m_[i].bias, v_[i].bias, c1, c2);
    }
  }

 private:
  void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
              std::vector<double>& v, double c1, double c2) const {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      p[k] -= cfg_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.epsilon);
    }
  }

  TrainConfig cfg_;
  std::vector<Conv2dGrads> m_, v_;
  long t_ = 0;
};

struct PatchRef {
  std::size_t image;
  std::size_t y, x;
};

// Shared epoch loop; `fill` writes one patch (noisy, clean) into batch slot b.
template <typename Dims, typename Fill>
TrainResult train_loop(DnCnnModel& model, std::size_t n_images, Dims dims, const TrainConfig& cfg,
                       Rng& rng, Fill fill, const EpochCallback& on_epoch) {
  if (n_images == 0) throw DataError("dncnn train: empty corpus");
  if (!(cfg.learning_rate > 0.0)) throw UsageError("dncnn train: learning rate must be positive");
  if (cfg.batch_size < 1 || cfg.patches_per_image < 1 || cfg.epochs < 0) {
    throw UsageError("dncnn train: invalid batch/patch/epoch counts");
  }
  std::size_t ph = 0, pw = 0;
  if (cfg.patch_size > 0) {
    ph = pw = static_cast<std::size_t>(cfg.patch_size);
    for (std::size_t i = 0; i < n_images; ++i) {
      const auto [h, w] = dims(i);
      if (h < ph || w < pw) throw DataError("dncnn train: patch larger than image " + std::to_string(i));
    }
  } else {
    std::tie(ph, pw) = dims(0);
    for (std::size_t i = 1; i < n_images; ++i) {
      if (dims(i) != std::pair{ph, pw}) {
        throw DataError("dncnn train: whole-image training needs equal image sizes");
      }
    }
  }

  Adam adam(model, cfg);
  TrainResult result;
  const auto per_image = static_cast<std::size_t>(cfg.patches_per_image);
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<PatchRef> patches;
    patches.reserve(n_images * per_image);
    for (std::size_t i = 0; i < n_images; ++i) {
      const auto [h, w] = dims(i);
      for (std::size_t k = 0; k < per_image; ++k) {
        patches.push_back({i, static_cast<std::size_t>(rng.below(h - ph + 1)),
                           static_cast<std::size_t>(rng.below(w - pw + 1))});
      }
    }
    rng.shuffle(patches);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < patches.size(); start += batch_size) {
      const std::size_t nb = std::min(batch_size, patches.size() - start);
      Tensor4 noisy(nb, 1, ph, pw), clean(nb, 1, ph, pw);
      for (std::size_t b = 0; b < nb; ++b) {
        fill(patches[start + b], ph, pw, noisy.plane_ptr(b, 0), clean.plane_ptr(b, 0));
      }
      LossAndGrads lg = residual_loss(model, noisy, clean);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "dncnn training diverged at epoch " << epoch << ", batch " << start / batch_size
            << " (loss " << lg.loss << ", lr " << cfg.learning_rate << ")";
        throw ModelError(msg.str());
      }
      adam.step(model, lg.grads);
      total += lg.loss * static_cast<double>(nb);
      count += nb;
    }
    const double mean = count ? total / static_cast<double>(count) : 0.0;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

void copy_patch(const Matrix& src, std::size_t y, std::size_t x, std::size_t ph, std::size_t pw,
                double* dst) {
  for (std::size_t r = 0; r < ph; ++r) {
    const auto row = src.row(y + r);
    std::copy(row.begin() + static_cast<std::ptrdiff_t>(x),
              row.begin() + static_cast<std::ptrdiff_t>(x + pw), dst + r * pw);
  }
}

}  // namespace

TrainResult train_synthetic(DnCnnModel& model, const std::vector<Matrix>& clean,
                            const TrainConfig& cfg, const EpochCallback& on_epoch) {
  Rng rng(cfg.seed);
  const auto dims = [&](std::size_t i) { return std::pair{clean[i].rows(), clean[i].cols()}; };
  const auto fill = [&](const PatchRef& p, std::size_t ph, std::size_t pw, double* noisy,
                        double* target) {
    copy_patch(clean[p.image], p.y, p.x, ph, pw, target);
    const double sigma = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max);
    for (std::size_t k = 0; k < ph * pw; ++k) noisy[k] = target[k] + sigma * rng.gaussian();
  };
  return train_loop(model, clean.size(), dims, cfg, rng, fill, on_epoch);
}

TrainResult train_paired(DnCnnModel& model, const std::vector<ImagePair>& pairs,
                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
  for (const auto& p : pairs) {
    if (!p.noisy.same_shape(p.clean)) throw DataError("dncnn train: unaligned image pair");
  }
  Rng rng(cfg.seed);
  const auto dims = [&](std::size_t i) { return std::pair{pairs[i].clean.rows(), pairs[i].clean.cols()}; };
  const auto fill = [&](const PatchRef& p, std::size_t ph, std::size_t pw, double* noisy,
                        double* target) {
    copy_patch(pairs[p.image].noisy, p.y, p.x, ph, pw, noisy);
    copy_patch(pairs[p.image].clean, p.y, p.x, ph, pw, target);
  };
  return train_loop(model, pairs.size(), dims, cfg, rng, fill, on_epoch);
}

Matrix dncnn_denoise(const DnCnnModel& model, const Matrix& v) {
  const Tensor4 residual = dncnn_forward(model, tensor_from_image(v));
  Matrix out(v.rows(), v.cols());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.data()[k] = std::clamp(v.data()[k] - residual.data[k], 0.0, 1.0);
  }
  return out;
}

}  // namespace micclass
