#include "micclass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "micclass/error.hpp"
#include "micclass/fft.hpp"
#include "micclass/spectral.hpp"

namespace micclass {

double psnr(const Matrix& ideal, const Matrix& test) {
  if (!ideal.same_shape(test)) throw DataError("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    const double d = ideal.data()[i] - test.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ideal.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> ssim_window(const SsimParams& p) {
  const int n = p.window;
  const double c = (n - 1) / 2.0;
  std::vector<double> w(static_cast<std::size_t>(n * n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      const double v = std::exp(-d2 / (2.0 * p.sigma * p.sigma));
      w[static_cast<std::size_t>(i * n + j)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

double ssim(const Matrix& ideal, const Matrix& test, const SsimParams& p) {
  if (!ideal.same_shape(test)) throw DataError("ssim: shape mismatch");
  const auto win = static_cast<std::size_t>(p.window);
  if (ideal.rows() < win || ideal.cols() < win) throw DataError("ssim: image smaller than window");
  const auto w = ssim_window(p);
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2);
  const double c2 = std::pow(p.k2 * p.dynamic_range, 2);
  const std::size_t out_r = ideal.rows() - win + 1, out_c = ideal.cols() - win + 1;
  std::vector<double> row_sums(out_r, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < out_r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < out_c; ++j) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (std::size_t a = 0; a < win; ++a) {
        for (std::size_t b = 0; b < win; ++b) {
          const double wt = w[a * win + b];
          const double x = ideal(i + a, j + b), y = test(i + a, j + b);
          mx += wt * x;
          my += wt * y;
          xx += wt * x * x;
          yy += wt * y * y;
          xy += wt * x * y;
        }
      }
      const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    row_sums[i] = acc;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total / static_cast<double>(out_r * out_c);
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> l)
    : labels(std::move(l)), counts(labels.size(), std::vector<long>(labels.size(), 0)) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, long n) {
  counts.at(truth).at(predicted) += n;
}

void ConfusionMatrix::add(const std::string& truth, const std::string& predicted) {
  const auto find = [&](const std::string& s) {
    const auto it = std::find(labels.begin(), labels.end(), s);
    if (it == labels.end()) throw DataError("confusion matrix: unknown label '" + s + "'");
    return static_cast<std::size_t>(it - labels.begin());
  };
  add(find(truth), find(predicted));
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& r : counts) {
    for (long v : r) t += v;
  }
  return t;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.counts.size();
  const long total = cm.total();
  if (k == 0 || total == 0) throw DataError("classification_metrics: empty confusion matrix");
  ClassificationMetrics m;
  long trace = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.precision.assign(k, nan);
  m.recall.assign(k, nan);
  double psum = 0.0, rsum = 0.0;
  int pn = 0, rn = 0;
  for (std::size_t c = 0; c < k; ++c) {
    trace += cm.counts[c][c];
    long row = 0, col = 0;
    for (std::size_t o = 0; o < k; ++o) {
      row += cm.counts[c][o];
      col += cm.counts[o][c];
    }
    if (col > 0) {
      m.precision[c] = static_cast<double>(cm.counts[c][c]) / static_cast<double>(col);
      psum += m.precision[c];
      ++pn;
    }
    if (row > 0) {
      m.recall[c] = static_cast<double>(cm.counts[c][c]) / static_cast<double>(row);
      rsum += m.recall[c];
      ++rn;
    }
  }
  m.mca = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
  m.macro_precision = pn ? psum / pn : 0.0;
  m.macro_recall = rn ? rsum / rn : 0.0;
  return m;
}

Matrix stft_magnitude(const std::vector<double>& x, const StftResolution& r) {
  if (r.win_length > r.n_fft || r.hop <= 0 || r.win_length <= 0) {
    throw UsageError("stft_loss: require 0 < win_length <= n_fft and hop > 0");
  }
  if (x.size() < static_cast<std::size_t>(r.win_length)) {
    throw DataError("stft_loss: signal shorter than the analysis window");
  }
  const auto win = make_window(WindowType::kHann, r.win_length);
  const std::size_t frames = (x.size() - win.size()) / static_cast<std::size_t>(r.hop) + 1;
  const std::size_t bins = static_cast<std::size_t>(r.n_fft / 2 + 1);
  Matrix out(frames, bins);
  std::vector<double> frame(static_cast<std::size_t>(r.n_fft));
  for (std::size_t l = 0; l < frames; ++l) {
    std::fill(frame.begin(), frame.end(), 0.0);
    const std::size_t start = l * static_cast<std::size_t>(r.hop);
    for (std::size_t i = 0; i < win.size(); ++i) frame[i] = x[start + i] * win[i];
    const auto spec = rfft(frame);
    for (std::size_t b = 0; b < bins; ++b) out(l, b) = std::abs(spec[b]);
  }
  return out;
}

StftLoss stft_loss(const AudioClip& reference, const AudioClip& estimate, const StftLossConfig& cfg) {
  if (reference.samples.size() != estimate.samples.size()) {
    throw DataError("stft_loss: signals differ in length");
  }
  if (cfg.resolutions.empty()) throw UsageError("stft_loss: need at least one resolution");
  const double T = static_cast<double>(reference.samples.size());
  StftLoss out;
  double stft_sum = 0.0;
  for (const auto& r : cfg.resolutions) {
    const Matrix a = stft_magnitude(reference.samples, r);
    const Matrix b = stft_magnitude(estimate.samples, r);
    double num = 0.0, den = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a.data()[i] - b.data()[i];
      num += d * d;
      den += a.data()[i] * a.data()[i];
      l1 += std::abs(std::log(std::max(a.data()[i], cfg.magnitude_floor)) -
                     std::log(std::max(b.data()[i], cfg.magnitude_floor)));
    }
    if (!(den > 0.0)) throw DataError("stft_loss: reference signal has zero spectral energy");
    const double sc = std::sqrt(num) / std::sqrt(den);
    const double mag = l1 / T;
    out.spectral_convergence.push_back(sc);
    out.log_magnitude.push_back(mag);
    out.stft.push_back(sc + mag);
    stft_sum += sc + mag;
  }
  double l1 = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    l1 += std::abs(reference.samples[i] - estimate.samples[i]);
  }
  out.composite = (l1 + stft_sum) / T;
  return out;
}

}  // namespace micclass
