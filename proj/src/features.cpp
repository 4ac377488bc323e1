#include "micclass/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "micclass/error.hpp"

namespace micclass {

void MfccConfig::validate(int sample_rate) const {
  if (n_mels < 1 || n_coeffs < 1 || n_coeffs > n_mels) {
    throw UsageError("mfcc: require 1 <= n_coeffs <= n_mels");
  }
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw UsageError("mfcc: require 0 <= fmin < fmax <= sample_rate/2");
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(const MfccConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_centers(const MfccConfig& cfg) {
  auto edges = mel_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank(const MfccConfig& cfg, int n_fft, int sample_rate) {
  cfg.validate(sample_rate);
  const auto edges = mel_edges(cfg);
  const std::size_t bins = static_cast<std::size_t>(n_fft / 2);
  Matrix fb(static_cast<std::size_t>(cfg.n_mels), bins);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    if (!(center > left && right > center)) {
      throw DataError("mel_filterbank: degenerate band " + std::to_string(m));
    }
    double peak = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b + 1) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, b) = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      throw DataError("mel_filterbank: band " + std::to_string(m) +
                      " covers no frequency bin (mel centers collide)");
    }
    for (std::size_t b = 0; b < bins; ++b) fb(m, b) /= peak;
  }
  return fb;
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double s0 = std::sqrt(1.0 / n);
  const double s = std::sqrt(2.0 / n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * k / n);
    }
    out[k] = acc * (k == 0 ? s0 : s);
  }
  return out;
}

std::vector<double> rasta_filter(std::span<const double> x) {
  static constexpr double kNum[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  static constexpr double kPole = 0.98;
  std::vector<double> y(x.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 5 && k <= t; ++k) acc += kNum[k] * x[t - k];
    prev = acc + kPole * prev;
    y[t] = prev;
  }
  return y;
}

Matrix mfcc(const LogPowerSpectrogram& spec, const MfccConfig& cfg) {
  const Matrix fb = mel_filterbank(cfg, spec.config.n_fft, spec.sample_rate);
  if (fb.cols() != spec.bins()) {
    throw DataError("mfcc: spectrogram bins do not match the filterbank");
  }
  const std::size_t frames = spec.frames();
  const std::size_t n_mels = fb.rows();
  const std::size_t n_coeffs = static_cast<std::size_t>(cfg.n_coeffs);

  // Cosine table for the orthonormal DCT-II.
  Matrix dct(n_coeffs, n_mels);
  for (std::size_t k = 1; k <= n_coeffs; ++k) {
    for (std::size_t i = 0; i < n_mels; ++i) {
      dct(k - 1, i) = std::sqrt(2.0 / n_mels) *
                      std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * k / n_mels);
    }
  }

  Matrix out(frames, n_coeffs);
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < frames; ++l) {
    std::vector<double> power(spec.bins());
    const auto row = spec.values.row(l);
    for (std::size_t b = 0; b < power.size(); ++b) power[b] = std::pow(10.0, row[b] / 10.0);
    std::vector<double> logmel(n_mels);
    for (std::size_t m = 0; m < n_mels; ++m) {
      double e = 0.0;
      const auto f = fb.row(m);
      for (std::size_t b = 0; b < power.size(); ++b) e += f[b] * power[b];
      logmel[m] = std::log(std::max(e, 1e-10));
    }
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_mels; ++i) acc += dct(k, i) * logmel[i];
      out(l, k) = acc;
    }
  }

  if (cfg.rasta && frames > 0) {
    std::vector<double> traj(frames);
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double mean = 0.0;
      for (std::size_t l = 0; l < frames; ++l) {
        traj[l] = out(l, k);
        mean += traj[l];
      }
      if (cfg.rasta_center) {
        mean /= static_cast<double>(frames);
        for (double& v : traj) v -= mean;
      }
      const auto filtered = rasta_filter(traj);
      for (std::size_t l = 0; l < frames; ++l) out(l, k) = filtered[l];
    }
  }
  return out;
}

}  // namespace micclass
