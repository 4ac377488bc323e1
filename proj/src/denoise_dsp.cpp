#include "micclass/denoise_dsp.hpp"

#include <algorithm>
#include <cmath>

#include "micclass/error.hpp"

namespace micclass {

namespace {

void clamp01(Matrix& m) {
  for (double& v : m.data()) v = std::clamp(v, 0.0, 1.0);
}

// Replicate-padded copy with `pad` pixels on every side.
Matrix pad_replicate(const Matrix& v, int pad) {
  const long rows = static_cast<long>(v.rows());
  const long cols = static_cast<long>(v.cols());
  Matrix out(v.rows() + 2 * static_cast<std::size_t>(pad), v.cols() + 2 * static_cast<std::size_t>(pad));
  for (long i = 0; i < static_cast<long>(out.rows()); ++i) {
    const long si = std::clamp(i - pad, 0L, rows - 1);
    for (long j = 0; j < static_cast<long>(out.cols()); ++j) {
      const long sj = std::clamp(j - pad, 0L, cols - 1);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          v(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
    }
  }
  return out;
}

}  // namespace

// --- total variation -------------------------------------------------------

double total_variation(const Matrix& u) {
  const std::size_t rows = u.rows(), cols = u.cols();
  double tv = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double dx = i + 1 < rows ? u(i + 1, j) - u(i, j) : 0.0;
      const double dy = j + 1 < cols ? u(i, j + 1) - u(i, j) : 0.0;
      tv += std::sqrt(dx * dx + dy * dy);
    }
  }
  return tv;
}

double tv_objective(const Matrix& u, const Matrix& v, double lambda) {
  double fid = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u.data()[k] - v.data()[k];
    fid += d * d;
  }
  return 0.5 * fid + lambda * total_variation(u);
}

namespace {

// div = -grad^T for forward differences with a zero last difference.
void divergence(const Matrix& px, const Matrix& py, Matrix& div) {
  const std::size_t rows = px.rows(), cols = px.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double d = 0.0;
      if (i + 1 < rows) d += px(i, j);
      if (i > 0) d -= px(i - 1, j);
      if (j + 1 < cols) d += py(i, j);
      if (j > 0) d -= py(i, j - 1);
      div(i, j) = d;
    }
  }
}

}  // namespace

TvResult tv_minimize(const Matrix& v, const TvParams& p) {
  if (!(p.lambda >= 0.0)) throw UsageError("tv: lambda must be nonnegative");
  TvResult res;
  if (p.lambda == 0.0 || v.empty()) {
    res.u = v;
    res.converged = true;
    return res;
  }
  const std::size_t rows = v.rows(), cols = v.cols();
  const double lambda = p.lambda;
  constexpr double tau = 0.125;
  const double half_v2 = [&] {
    double s = 0.0;
    for (double x : v.data()) s += x * x;
    return 0.5 * s;
  }();

  Matrix px(rows, cols), py(rows, cols), div(rows, cols), w(rows, cols);
  res.u = v;
  for (int it = 0; it < p.max_iters; ++it) {
    divergence(px, py, div);
    for (std::size_t k = 0; k < w.size(); ++k) w.data()[k] = div.data()[k] - v.data()[k] / lambda;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double gx = i + 1 < rows ? w(i + 1, j) - w(i, j) : 0.0;
        const double gy = j + 1 < cols ? w(i, j + 1) - w(i, j) : 0.0;
        const double denom = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
        px(i, j) = (px(i, j) + tau * gx) / denom;
        py(i, j) = (py(i, j) + tau * gy) / denom;
      }
    }
    divergence(px, py, div);
    double half_u2 = 0.0;
    for (std::size_t k = 0; k < res.u.size(); ++k) {
      const double u = v.data()[k] - lambda * div.data()[k];
      res.u.data()[k] = u;
      half_u2 += u * u;
    }
    half_u2 *= 0.5;
    const double primal = tv_objective(res.u, v, lambda);
    const double dual = half_v2 - half_u2;
    const double gap = primal - dual;
    res.gaps.push_back(gap);
    res.iterations = it + 1;
    if (gap <= p.tol * static_cast<double>(v.size())) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Matrix tv_denoise(const Matrix& v, const TvParams& p) {
  Matrix u = tv_minimize(v, p).u;
  clamp01(u);
  return u;
}

// --- non-local means -------------------------------------------------------

Matrix nlm_denoise(const Matrix& v, const NlmParams& p) {
  if (p.patch_radius < 1 || p.search_radius < 1) throw UsageError("nlm: radii must be >= 1");
  if (!(p.h > 0.0)) throw UsageError("nlm: h must be positive");
  const int pr = p.patch_radius, sr = p.search_radius;
  const int pad = pr + sr;
  const Matrix padded = pad_replicate(v, pad);
  const long rows = static_cast<long>(v.rows()), cols = static_cast<long>(v.cols());
  const double patch_n = static_cast<double>((2 * pr + 1) * (2 * pr + 1));
  const double offset = 2.0 * p.sigma_est * p.sigma_est;
  const double inv_h2 = 1.0 / (p.h * p.h);
  const std::size_t pc = padded.cols();
  const double* base = padded.data().data();

  Matrix out(v.rows(), v.cols());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      const long ci = i + pad, cj = j + pad;
      const double center = base[static_cast<std::size_t>(ci) * pc + static_cast<std::size_t>(cj)];
      double num = 0.0, den = 0.0;
      for (long di = -sr; di <= sr; ++di) {
        for (long dj = -sr; dj <= sr; ++dj) {
          const long ni = ci + di, nj = cj + dj;
          double d2 = 0.0;
          for (long a = -pr; a <= pr; ++a) {
            const double* r1 = base + static_cast<std::size_t>(ci + a) * pc;
            const double* r2 = base + static_cast<std::size_t>(ni + a) * pc;
            for (long b = -pr; b <= pr; ++b) {
              const double t = r1[cj + b] - r2[nj + b];
              d2 += t * t;
            }
          }
          d2 /= patch_n;
          const double w = std::exp(-std::max(d2 - offset, 0.0) * inv_h2);
          // accumulate offsets from the center so constant regions come back exact
          num += w * (base[static_cast<std::size_t>(ni) * pc + static_cast<std::size_t>(nj)] - center);
          den += w;
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = center + num / den;
    }
  }
  clamp01(out);
  return out;
}

// --- bilateral -------------------------------------------------------------

Matrix bilateral_denoise(const Matrix& v, const BilateralParams& p) {
  if (p.radius < 1) throw UsageError("bilateral: radius must be >= 1");
  if (!(p.sigma_s > 0.0 && p.sigma_c > 0.0)) throw UsageError("bilateral: spreads must be positive");
  const int r = p.radius;
  const Matrix padded = pad_replicate(v, r);
  const long rows = static_cast<long>(v.rows()), cols = static_cast<long>(v.cols());
  const std::size_t width = static_cast<std::size_t>(2 * r + 1);
  std::vector<double> closeness(width * width);
  for (int di = -r; di <= r; ++di) {
    for (int dj = -r; dj <= r; ++dj) {
      const double d = std::sqrt(static_cast<double>(di * di + dj * dj)) / p.sigma_c;
      closeness[static_cast<std::size_t>(di + r) * width + static_cast<std::size_t>(dj + r)] =
          std::exp(-0.5 * d * d);
    }
  }
  const double inv_s = 1.0 / p.sigma_s;
  const std::size_t pc = padded.cols();
  const double* base = padded.data().data();

  Matrix out(v.rows(), v.cols());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      const double center = v(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      double num = 0.0, den = 0.0;
      for (long di = -r; di <= r; ++di) {
        const double* row = base + static_cast<std::size_t>(i + r + di) * pc;
        for (long dj = -r; dj <= r; ++dj) {
          const double val = row[j + r + dj];
          const double s = (val - center) * inv_s;
          const double w = std::exp(-0.5 * s * s) *
                           closeness[static_cast<std::size_t>(di + r) * width + static_cast<std::size_t>(dj + r)];
          num += w * (val - center);
          den += w;
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = center + num / den;
    }
  }
  clamp01(out);
  return out;
}

// --- wavelets --------------------------------------------------------------

std::vector<double> wavelet_lowpass(WaveletType w) {
  if (w == WaveletType::kHaar) {
    const double s = 1.0 / std::sqrt(2.0);
    return {s, s};
  }
  const double r3 = std::sqrt(3.0);
  const double n = 4.0 * std::sqrt(2.0);
  return {(1.0 + r3) / n, (3.0 + r3) / n, (3.0 - r3) / n, (1.0 - r3) / n};
}

namespace {

std::vector<double> highpass_from(const std::vector<double>& h) {
  const std::size_t len = h.size();
  std::vector<double> g(len);
  for (std::size_t k = 0; k < len; ++k) g[k] = ((k % 2) ? -1.0 : 1.0) * h[len - 1 - k];
  return g;
}

// One periodized analysis step on a strided sequence of even length n.
void analyze(const double* x, std::size_t n, std::size_t stride, const std::vector<double>& h,
             const std::vector<double>& g, double* lo, double* hi, std::size_t out_stride) {
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double v = x[((2 * k + t) % n) * stride];
      a += h[t] * v;
      d += g[t] * v;
    }
    lo[k * out_stride] = a;
    hi[k * out_stride] = d;
  }
}

void synthesize(const double* lo, const double* hi, std::size_t n, std::size_t in_stride,
                const std::vector<double>& h, const std::vector<double>& g, double* x,
                std::size_t stride) {
  for (std::size_t m = 0; m < n; ++m) x[m * stride] = 0.0;
  const std::size_t half = n / 2;
  for (std::size_t k = 0; k < half; ++k) {
    const double a = lo[k * in_stride], d = hi[k * in_stride];
    for (std::size_t t = 0; t < h.size(); ++t) x[((2 * k + t) % n) * stride] += h[t] * a + g[t] * d;
  }
}

std::size_t reflect(long i, long n) {
  // Half-sample symmetric extension.
  const long period = 2 * n;
  long m = ((i % period) + period) % period;
  if (m >= n) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

WaveletPyramid dwt2(const Matrix& image, int levels, WaveletType w) {
  if (levels < 1) throw UsageError("dwt2: levels must be >= 1");
  const std::size_t block = std::size_t{1} << levels;
  const std::size_t prow = (image.rows() + block - 1) / block * block;
  const std::size_t pcol = (image.cols() + block - 1) / block * block;
  Matrix cur(prow, pcol);
  for (std::size_t i = 0; i < prow; ++i) {
    for (std::size_t j = 0; j < pcol; ++j) {
      cur(i, j) = image(reflect(static_cast<long>(i), static_cast<long>(image.rows())),
                        reflect(static_cast<long>(j), static_cast<long>(image.cols())));
    }
  }
  const auto h = wavelet_lowpass(w);
  const auto g = highpass_from(h);
  WaveletPyramid pyr;
  pyr.rows = image.rows();
  pyr.cols = image.cols();
  pyr.wavelet = w;
  for (int lev = 0; lev < levels; ++lev) {
    const std::size_t r = cur.rows(), c = cur.cols();
    // Rows: transform along columns index (horizontal).
    Matrix lo_h(r, c / 2), hi_h(r, c / 2);
    for (std::size_t i = 0; i < r; ++i) {
      analyze(&cur(i, 0), c, 1, h, g, &lo_h(i, 0), &hi_h(i, 0), 1);
    }
    // Columns: vertical transform of both halves.
    Matrix ll(r / 2, c / 2), lh(r / 2, c / 2), hl(r / 2, c / 2), hh(r / 2, c / 2);
    for (std::size_t j = 0; j < c / 2; ++j) {
      analyze(&lo_h(0, j), r, c / 2, h, g, &ll(0, j), &hl(0, j), c / 2);
      analyze(&hi_h(0, j), r, c / 2, h, g, &lh(0, j), &hh(0, j), c / 2);
    }
    pyr.details.push_back({std::move(lh), std::move(hl), std::move(hh)});
    cur = std::move(ll);
  }
  pyr.approx = std::move(cur);
  return pyr;
}

Matrix idwt2(const WaveletPyramid& pyr) {
  const auto h = wavelet_lowpass(pyr.wavelet);
  const auto g = highpass_from(h);
  Matrix cur = pyr.approx;
  for (std::size_t lev = pyr.details.size(); lev-- > 0;) {
    const auto& bands = pyr.details[lev];
    const std::size_t r = cur.rows() * 2, c = cur.cols() * 2;
    Matrix lo_h(r, c / 2), hi_h(r, c / 2);
    for (std::size_t j = 0; j < c / 2; ++j) {
      synthesize(cur.data().data() + j, bands.hl.data().data() + j, r, c / 2, h, g, &lo_h(0, j), c / 2);
      synthesize(bands.lh.data().data() + j, bands.hh.data().data() + j, r, c / 2, h, g, &hi_h(0, j), c / 2);
    }
    Matrix next(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      synthesize(&lo_h(i, 0), &hi_h(i, 0), c, 1, h, g, &next(i, 0), 1);
    }
    cur = std::move(next);
  }
  Matrix out(pyr.rows, pyr.cols);
  for (std::size_t i = 0; i < pyr.rows; ++i) {
    for (std::size_t j = 0; j < pyr.cols; ++j) out(i, j) = cur(i, j);
  }
  return out;
}

double soft_threshold(double v, double t) {
  const double mag = std::max(std::abs(v) - t, 0.0);
  return v < 0.0 ? -mag : mag;
}

namespace {

double median_abs(const Matrix& m) {
  std::vector<double> a(m.data().size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(m.data()[i]);
  if (a.empty()) return 0.0;
  const std::size_t mid = a.size() / 2;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  if (a.size() % 2 == 1) return a[mid];
  const double upper = a[mid];
  const double lower = *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double shrink_band(Matrix& band, double sigma, bool subtract) {
  double energy = 0.0, maxabs = 0.0;
  for (double v : band.data()) {
    energy += v * v;
    maxabs = std::max(maxabs, std::abs(v));
  }
  energy /= static_cast<double>(band.size());
  const double sigma_u = std::sqrt(std::max(energy - (subtract ? sigma * sigma : 0.0), 0.0));
  double t;
  if (sigma == 0.0) {
    t = 0.0;
  } else if (sigma_u == 0.0) {
    t = maxabs;
  } else {
    t = sigma * sigma / sigma_u;
  }
  for (double& v : band.data()) v = soft_threshold(v, t);
  return t;
}

}  // namespace

Matrix bayes_shrink(const Matrix& v, const WaveletParams& p, BayesShrinkReport* report) {
  if (p.levels < 1) throw UsageError("bayes_shrink: levels must be >= 1");
  WaveletPyramid pyr = dwt2(v, p.levels, p.wavelet);
  const double sigma = median_abs(pyr.details.front().hh) / 0.6745;
  BayesShrinkReport local;
  local.sigma = sigma;
  for (auto& bands : pyr.details) {
    if (p.all_orientations) {
      local.thresholds.push_back(shrink_band(bands.lh, sigma, p.subtract_noise_variance));
      local.thresholds.push_back(shrink_band(bands.hl, sigma, p.subtract_noise_variance));
    }
    local.thresholds.push_back(shrink_band(bands.hh, sigma, p.subtract_noise_variance));
  }
  if (report) *report = std::move(local);
  Matrix out = idwt2(pyr);
  clamp01(out);
  return out;
}

}  // namespace micclass
