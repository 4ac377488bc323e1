#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <limits>

#include "micclass/error.hpp"
#include "micclass/metrics.hpp"
#include "micclass/rng.hpp"

using namespace micclass;

namespace {

Matrix random_image(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.data()) v = rng.uniform();
  return m;
}

// direct windowed statistics with an explicit Gaussian window
double ssim_oracle(const Matrix& x, const Matrix& y) {
  const int n = 11;
  double w[11][11], ws = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) ws += (w[a][b] = std::exp(-((a - 5) * (a - 5) + (b - 5) * (b - 5)) / (2 * 1.5 * 1.5)));
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int count = 0;
  for (std::size_t i = 0; i + n <= x.rows(); ++i)
    for (std::size_t j = 0; j + n <= x.cols(); ++j) {
      double mx = 0, my = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          mx += w[a][b] / ws * x(i + a, j + b);
          my += w[a][b] / ws * y(i + a, j + b);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double dx = x(i + a, j + b) - mx, dy = y(i + a, j + b) - my;
          vx += w[a][b] / ws * dx * dx;
          vy += w[a][b] / ws * dy * dy;
          cxy += w[a][b] / ws * dx * dy;
        }
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

AudioClip random_clip(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  AudioClip c;
  c.samples.resize(n);
  for (auto& v : c.samples) v = rng.gaussian(0, 0.3);
  return c;
}

}  // namespace

TEST(Psnr, Examples) {
  const auto a = random_image(8, 8, 1);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(psnr(Matrix(4, 4, 0.0), Matrix(4, 4, 0.5)), 20 * std::log10(2.0), 1e-12);
  const auto b = random_image(8, 8, 2);
  double mse = 0;
  for (std::size_t i = 0; i < 64; ++i) mse += std::pow(a.data()[i] - b.data()[i], 2);
  mse /= 64;
  EXPECT_NEAR(psnr(a, b), 10 * std::log10(1.0 / mse), 1e-9);
  EXPECT_THROW(psnr(a, Matrix(8, 7)), DataError);
}

TEST(Psnr, DecreasesWithNoise) {
  const auto u = random_image(32, 32, 3);
  Rng rng(4);
  std::vector<double> n(u.size());
  for (auto& v : n) v = rng.gaussian();
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Matrix v = u;
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] += s * n[i];
    const double p = psnr(u, v);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdentityAndSymmetry) {
  for (std::uint64_t s = 5; s < 8; ++s) {
    const auto a = random_image(16, 20, s), b = random_image(16, 20, s + 10);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Ssim, AntiCorrelatedBinaryIsNegative) {
  Rng rng(8);
  Matrix u(16, 16);
  for (auto& v : u.data()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  Matrix inv = u;
  for (auto& v : inv.data()) v = 1.0 - v;
  EXPECT_LT(ssim(u, inv), 0.0);
}

TEST(Ssim, MatchesWindowedOracle) {
  const auto a = random_image(16, 16, 9), b = random_image(16, 16, 10);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
  Matrix c = a;
  for (auto& v : c.data()) v = 0.8 * v + 0.05;
  EXPECT_NEAR(ssim(a, c), ssim_oracle(a, c), 1e-9);
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(Matrix(16, 16), Matrix(16, 15)), DataError);
  EXPECT_THROW(ssim(Matrix(8, 8), Matrix(8, 8)), DataError);
}

TEST(Classification, Diagonal) {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(0, 0, 5);
  cm.add(1, 1, 3);
  cm.add(2, 2, 7);
  const auto m = classification_metrics(cm);
  EXPECT_DOUBLE_EQ(m.mca, 100.0);
  EXPECT_DOUBLE_EQ(m.macro_precision, 1.0);
  EXPECT_DOUBLE_EQ(m.macro_recall, 1.0);
}

TEST(Classification, TwoClassHandArithmetic) {
  ConfusionMatrix cm({"a", "b"});
  cm.add(0, 0, 3);
  cm.add(0, 1, 1);
  cm.add(1, 0, 2);
  cm.add(1, 1, 2);
  const auto m = classification_metrics(cm);
  EXPECT_DOUBLE_EQ(m.mca, 62.5);
  EXPECT_NEAR(m.precision[0], 0.6, 1e-15);
  EXPECT_NEAR(m.precision[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.recall[0], 0.75, 1e-15);
  EXPECT_NEAR(m.recall[1], 0.5, 1e-15);
  EXPECT_NEAR(m.macro_precision, (0.6 + 2.0 / 3.0) / 2, 1e-15);
  EXPECT_NEAR(m.macro_recall, 0.625, 1e-15);
}

TEST(Classification, EmptyDenominatorsExcluded) {
  ConfusionMatrix cm({"a", "b", "c"});
  cm.add(0, 0, 4);
  cm.add(1, 0, 2);
  // class c never appears as truth or prediction; b never predicted
  const auto m = classification_metrics(cm);
  EXPECT_TRUE(std::isnan(m.precision[1]));
  EXPECT_TRUE(std::isnan(m.recall[2]));
  EXPECT_NEAR(m.macro_precision, 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(m.macro_recall, 0.5, 1e-15);
  EXPECT_THROW(classification_metrics(ConfusionMatrix({"a"})), DataError);
}

TEST(Classification, InvariantToLabelPermutation) {
  Rng rng(11);
  ConfusionMatrix cm({"a", "b", "c", "d"});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) cm.add(i, j, static_cast<long>(rng.below(9)));
  const std::size_t perm[4] = {2, 0, 3, 1};
  ConfusionMatrix p({"c", "a", "d", "b"});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) p.add(i, j, cm.counts[perm[i]][perm[j]]);
  const auto a = classification_metrics(cm), b = classification_metrics(p);
  EXPECT_NEAR(a.mca, b.mca, 1e-12);
  EXPECT_NEAR(a.macro_precision, b.macro_precision, 1e-12);
  EXPECT_NEAR(a.macro_recall, b.macro_recall, 1e-12);
}

TEST(Classification, AddByLabel) {
  ConfusionMatrix cm({"x", "y"});
  cm.add("x", "y");
  cm.add("y", "y");
  EXPECT_EQ(cm.counts[0][1], 1);
  EXPECT_EQ(cm.total(), 2);
  EXPECT_THROW(cm.add("z", "x"), DataError);
}

TEST(StftLossTest, IdenticalIsZero) {
  const auto u = random_clip(2048, 12);
  const auto l = stft_loss(u, u);
  for (double v : l.spectral_convergence) EXPECT_EQ(v, 0.0);
  for (double v : l.log_magnitude) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(l.composite, 0.0);
}

TEST(StftLossTest, DoubledSignalHasUnitConvergence) {
  const auto u = random_clip(2048, 13);
  auto v = u;
  for (auto& x : v.samples) x *= 2;
  const auto l = stft_loss(u, v);
  for (double s : l.spectral_convergence) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(StftLossTest, MatchesDirectMatrixNorms) {
  const auto u = random_clip(600, 14), v = random_clip(600, 15);
  StftLossConfig cfg;
  cfg.resolutions = {{64, 16, 64}, {128, 32, 100}};
  const auto l = stft_loss(u, v, cfg);
  const double T = 600;
  double total = 0;
  for (std::size_t r = 0; r < cfg.resolutions.size(); ++r) {
    const auto& res = cfg.resolutions[r];
    const std::size_t frames = (600 - res.win_length) / res.hop + 1;
    double num = 0, den = 0, mag = 0;
    for (std::size_t f = 0; f < frames; ++f)
      for (int k = 0; k <= res.n_fft / 2; ++k) {
        std::complex<double> A = 0, B = 0;
        for (int i = 0; i < res.win_length; ++i) {
          const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / res.win_length);
          const auto e = std::polar(1.0, -2 * std::numbers::pi * k * i / res.n_fft);
          A += w * u.samples[f * res.hop + i] * e;
          B += w * v.samples[f * res.hop + i] * e;
        }
        const double a = std::abs(A), b = std::abs(B);
        num += (a - b) * (a - b);
        den += a * a;
        mag += std::abs(std::log(std::max(a, 1e-7)) - std::log(std::max(b, 1e-7)));
      }
    const double sc = std::sqrt(num / den), lm = mag / T;
    EXPECT_NEAR(l.spectral_convergence[r], sc, 1e-9);
    EXPECT_NEAR(l.log_magnitude[r], lm, 1e-9);
    EXPECT_NEAR(l.stft[r], sc + lm, 1e-9);
    total += sc + lm;
  }
  double l1 = 0;
  for (std::size_t i = 0; i < 600; ++i) l1 += std::abs(u.samples[i] - v.samples[i]);
  EXPECT_NEAR(l.composite, (l1 + total) / T, 1e-9);
}

TEST(StftLossTest, Errors) {
  AudioClip z;
  z.samples.assign(1024, 0.0);
  const auto u = random_clip(1024, 16);
  EXPECT_THROW(stft_loss(z, u), DataError);
  EXPECT_THROW(stft_loss(u, random_clip(1000, 17)), DataError);
}
