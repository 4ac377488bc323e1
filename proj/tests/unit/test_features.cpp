#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "micclass/error.hpp"
#include "micclass/features.hpp"
#include "micclass/rng.hpp"

using namespace micclass;

namespace {

LogPowerSpectrogram make_spec(std::size_t frames, std::size_t bins) {
  LogPowerSpectrogram s;
  s.values = Matrix(frames, bins);
  return s;
}

std::vector<double> dct_oracle(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::cos(std::numbers::pi * (i + 0.5) * k / n);
    out[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return out;
}

}  // namespace

TEST(Mel, ScaleValues) {
  EXPECT_NEAR(hz_to_mel(8000.0), 2595.0 * std::log10(1.0 + 8000.0 / 700.0), 1e-9);
  EXPECT_NEAR(hz_to_mel(8000.0), 2840.02, 0.005);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
}

TEST(Mel, CentersMatchFormula) {
  MfccConfig cfg;
  const auto c = mel_centers(cfg);
  ASSERT_EQ(c.size(), 26u);
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double mel = top * (i + 1) / 27.0;
    EXPECT_NEAR(c[i], 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0), 1e-6);
    if (i) EXPECT_GT(c[i], c[i - 1]);
  }
}

TEST(Mel, FilterbankShape) {
  const auto fb = mel_filterbank(MfccConfig{}, 512, 16000);
  ASSERT_EQ(fb.rows(), 26u);
  ASSERT_EQ(fb.cols(), 256u);
  double prev_peak_bin = -1;
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    double peak = 0;
    std::size_t arg = 0;
    int runs = 0;
    bool inside = false;
    for (std::size_t b = 0; b < fb.cols(); ++b) {
      const double w = fb(m, b);
      EXPECT_GE(w, 0.0);
      if (w > peak) {
        peak = w;
        arg = b;
      }
      if (w > 0 && !inside) ++runs;
      inside = w > 0;
    }
    EXPECT_DOUBLE_EQ(peak, 1.0);
    EXPECT_EQ(runs, 1) << "filter " << m << " support not contiguous";
    EXPECT_GE(static_cast<double>(arg), prev_peak_bin);
    prev_peak_bin = static_cast<double>(arg);
  }
}

TEST(Mel, DegenerateBandIsError) {
  MfccConfig cfg;
  cfg.n_mels = 60;
  cfg.n_coeffs = 12;
  EXPECT_THROW(mel_filterbank(cfg, 64, 16000), DataError);
}

TEST(Mel, ConfigValidation) {
  MfccConfig cfg;
  cfg.n_coeffs = 30;
  EXPECT_THROW(cfg.validate(16000), UsageError);
  cfg = MfccConfig{};
  cfg.fmax = 9000;
  EXPECT_THROW(cfg.validate(16000), UsageError);
}

TEST(Dct, MatchesSummationOracle) {
  Rng rng(1);
  std::vector<double> x(26);
  for (auto& v : x) v = rng.gaussian();
  const auto got = dct2_orthonormal(x);
  const auto want = dct_oracle(x);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
}

TEST(Dct, Orthonormal) {
  const std::size_t n = 13;
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    cols.push_back(dct2_orthonormal(e));
  }
  // D^T D = I, with column i of D = dct(e_i)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += cols[i][k] * cols[j][k];
      EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST(Rasta, ImpulseResponse) {
  std::vector<double> x(8, 0.0);
  x[0] = 1.0;
  const auto y = rasta_filter(x);
  const double want[] = {0.2, 0.296, 0.29008, 0.1842784, -0.019407168};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(y[i], want[i], 1e-9);
  // direct recursion oracle for the remaining outputs
  for (int i = 5; i < 8; ++i) EXPECT_NEAR(y[i], 0.98 * y[i - 1], 1e-12);
}

TEST(Rasta, ConstantInputDecays) {
  const auto y = rasta_filter(std::vector<double>(1500, 1.0));
  for (std::size_t t = 700; t < y.size(); ++t) EXPECT_LT(std::abs(y[t]), 1e-6) << t;
  // the decay is geometric at the pole
  EXPECT_NEAR(y[600] / y[599], 0.98, 1e-9);
}

TEST(Rasta, Linear) {
  Rng rng(3);
  std::vector<double> a(200), b(200), s(200);
  for (std::size_t i = 0; i < 200; ++i) {
    a[i] = rng.gaussian();
    b[i] = rng.gaussian();
    s[i] = a[i] + b[i];
  }
  const auto ya = rasta_filter(a), yb = rasta_filter(b), ys = rasta_filter(s);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(ys[i], ya[i] + yb[i], 1e-12);
}

TEST(Mfcc, ConstantSpectrogramRowsIdentical) {
  auto s = make_spec(20, 256);
  for (std::size_t b = 0; b < 256; ++b)
    for (std::size_t l = 0; l < 20; ++l) s.values(l, b) = -40.0 - 0.1 * b;
  MfccConfig cfg;
  cfg.rasta = false;
  const auto c = mfcc(s, cfg);
  ASSERT_EQ(c.rows(), 20u);
  ASSERT_EQ(c.cols(), 12u);
  for (std::size_t l = 1; l < 20; ++l)
    for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(c(l, k), c(0, k));
}

TEST(Mfcc, SingleFrameMatchesManualPipeline) {
  Rng rng(5);
  auto s = make_spec(1, 256);
  for (auto& v : s.values.data()) v = rng.uniform(-90, 0);
  MfccConfig cfg;
  cfg.rasta = false;
  const auto got = mfcc(s, cfg);
  const auto fb = mel_filterbank(cfg, 512, 16000);
  std::vector<double> logmel(26);
  for (std::size_t m = 0; m < 26; ++m) {
    double e = 0;
    for (std::size_t b = 0; b < 256; ++b) e += fb(m, b) * std::pow(10.0, s.values(0, b) / 10);
    logmel[m] = std::log(std::max(e, 1e-10));
  }
  const auto d = dct_oracle(logmel);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(got(0, k), d[k + 1], 1e-9);
}

TEST(Mfcc, PaperWidth) {
  auto s = make_spec(10, 256);
  for (auto& v : s.values.data()) v = -50;
  EXPECT_EQ(mfcc(s, MfccConfig{}).cols(), 12u);
}

TEST(Mfcc, RastaRemovesSpectralTilt) {
  // frames share one spectral shape with a time-varying gain, so a fixed tilt
  // shifts every log-mel energy by a frame-independent amount
  Rng rng(6);
  const std::size_t L = 1200;
  std::vector<double> shape(256);
  for (auto& v : shape) v = rng.uniform(-60, -20);
  auto s = make_spec(L, 256);
  auto t = make_spec(L, 256);
  for (std::size_t l = 0; l < L; ++l) {
    const double gain = 8 * std::sin(0.05 * l) + 3 * rng.gaussian();
    for (std::size_t b = 0; b < 256; ++b) {
      s.values(l, b) = shape[b] + gain;
      t.values(l, b) = shape[b] + gain + (-6.0 + 12.0 * b / 255.0);
    }
  }
  MfccConfig raw;
  raw.rasta = false;
  const auto a = mfcc(s, raw), b = mfcc(t, raw);
  for (std::size_t k = 0; k < 12; ++k) {
    const double d0 = b(0, k) - a(0, k);
    for (std::size_t l = 1; l < L; ++l) EXPECT_NEAR(b(l, k) - a(l, k), d0, 1e-9);
  }
  MfccConfig ras;
  ras.rasta_center = false;
  const auto ra = mfcc(s, ras), rb = mfcc(t, ras);
  for (std::size_t l = 1000; l < L; ++l)
    for (std::size_t k = 0; k < 12; ++k) EXPECT_LT(std::abs(rb(l, k) - ra(l, k)), 1e-3);
  const auto ca = mfcc(s, MfccConfig{}), cb = mfcc(t, MfccConfig{});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < 12; ++k) EXPECT_NEAR(cb(l, k), ca(l, k), 1e-9);
}
