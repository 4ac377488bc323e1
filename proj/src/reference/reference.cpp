#include "micclass/reference.hpp"

#include <algorithm>
#include <cmath>

namespace micclass::reference {

namespace {

double at_clamped(const Matrix& m, long i, long j) {
  i = std::clamp(i, 0L, static_cast<long>(m.rows()) - 1);
  j = std::clamp(j, 0L, static_cast<long>(m.cols()) - 1);
  return m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Matrix nlm_denoise(const Matrix& v, const NlmParams& p) {
  const long rows = static_cast<long>(v.rows()), cols = static_cast<long>(v.cols());
  const long pr = p.patch_radius, sr = p.search_radius;
  Matrix out(v.rows(), v.cols());
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      double num = 0.0, den = 0.0;
      for (long ni = i - sr; ni <= i + sr; ++ni) {
        for (long nj = j - sr; nj <= j + sr; ++nj) {
          double d2 = 0.0;
          long count = 0;
          for (long a = -pr; a <= pr; ++a) {
            for (long b = -pr; b <= pr; ++b) {
              const double t = at_clamped(v, i + a, j + b) - at_clamped(v, ni + a, nj + b);
              d2 += t * t;
              ++count;
            }
          }
          d2 /= static_cast<double>(count);
          const double w =
              std::exp(-std::max(d2 - 2.0 * p.sigma_est * p.sigma_est, 0.0) / (p.h * p.h));
          num += w * at_clamped(v, ni, nj);
          den += w;
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = clamp01(num / den);
    }
  }
  return out;
}

Matrix bilateral_denoise(const Matrix& v, const BilateralParams& p) {
  const long rows = static_cast<long>(v.rows()), cols = static_cast<long>(v.cols());
  const long r = p.radius;
  Matrix out(v.rows(), v.cols());
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      const double center = v(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      double num = 0.0, den = 0.0;
      for (long a = -r; a <= r; ++a) {
        for (long b = -r; b <= r; ++b) {
          const double val = at_clamped(v, i + a, j + b);
          const double s = (val - center) / p.sigma_s;
          const double dist = std::sqrt(static_cast<double>(a * a + b * b)) / p.sigma_c;
          const double w = std::exp(-0.5 * s * s) * std::exp(-0.5 * dist * dist);
          num += w * val;
          den += w;
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = clamp01(num / den);
    }
  }
  return out;
}

Tensor4 conv2d_forward(const Tensor4& x, const Conv2d& layer) {
  Tensor4 y(x.n, layer.out_ch, x.h, x.w);
  const long H = static_cast<long>(x.h), W = static_cast<long>(x.w);
  for (std::size_t b = 0; b < x.n; ++b) {
    for (std::size_t co = 0; co < layer.out_ch; ++co) {
      for (long yy = 0; yy < H; ++yy) {
        for (long xx = 0; xx < W; ++xx) {
          double s = layer.bias[co];
          for (std::size_t ci = 0; ci < layer.in_ch; ++ci) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long iy = yy + ky - 1, ix = xx + kx - 1;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                s += layer.weight[((co * layer.in_ch + ci) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                  static_cast<std::size_t>(kx)] *
                     x.at(b, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
            }
          }
          y.at(b, co, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) = s;
        }
      }
    }
  }
  return y;
}

Tensor4 conv2d_backward(const Tensor4& x, const Conv2d& layer, const Tensor4& grad_out,
                        Conv2dGrads& grads) {
  if (grads.weight.size() != layer.weight.size()) grads.weight.assign(layer.weight.size(), 0.0);
  if (grads.bias.size() != layer.bias.size()) grads.bias.assign(layer.bias.size(), 0.0);
  Tensor4 gin(x.n, x.c, x.h, x.w);
  const long H = static_cast<long>(x.h), W = static_cast<long>(x.w);
  for (std::size_t b = 0; b < x.n; ++b) {
    for (std::size_t co = 0; co < layer.out_ch; ++co) {
      for (long yy = 0; yy < H; ++yy) {
        for (long xx = 0; xx < W; ++xx) {
          const double g = grad_out.at(b, co, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
          grads.bias[co] += g;
          for (std::size_t ci = 0; ci < layer.in_ch; ++ci) {
            for (long ky = 0; ky < 3; ++ky) {
              for (long kx = 0; kx < 3; ++kx) {
                const long iy = yy + ky - 1, ix = xx + kx - 1;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                const std::size_t widx =
                    ((co * layer.in_ch + ci) * 3 + static_cast<std::size_t>(ky)) * 3 +
                    static_cast<std::size_t>(kx);
                grads.weight[widx] +=
                    g * x.at(b, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                gin.at(b, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                    g * layer.weight[widx];
              }
            }
          }
        }
      }
    }
  }
  return gin;
}

}  // namespace micclass::reference
