#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "micclass/error.hpp"
#include "micclass/rng.hpp"
#include "micclass/speech_model.hpp"

using namespace micclass;

namespace {

Matrix gaussian_blobs(const std::vector<std::vector<double>>& centers, std::size_t per,
                      double sd, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = centers[0].size();
  Matrix x(centers.size() * per, d);
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t i = 0; i < per; ++i)
      for (std::size_t j = 0; j < d; ++j) x(c * per + i, j) = centers[c][j] + sd * rng.gaussian();
  return x;
}

Gmm two_mixture_1d(double m0, double m1) {
  Gmm g;
  g.means = Matrix(2, 1);
  g.means(0, 0) = m0;
  g.means(1, 0) = m1;
  g.variances = Matrix(2, 1, 1.0);
  g.priors = {0.5, 0.5};
  return g;
}

void expect_em_monotone(const Matrix& data, int mixtures, std::uint64_t seed) {
  GmmFitOptions o;
  o.mixtures = mixtures;
  o.seed = seed;
  o.max_iters = 60;
  o.tol = 0.0;
  const auto r = gmm_fit(data, o);
  ASSERT_EQ(r.log_likelihood.size(), 60u);
  for (std::size_t t = 1; t < r.log_likelihood.size(); ++t)
    EXPECT_GE(r.log_likelihood[t], r.log_likelihood[t - 1] - 1e-8) << "iteration " << t;
}

}  // namespace

TEST(Gmm, SingleMixtureIsClosedForm) {
  const auto x = gaussian_blobs({{1.0, -2.0, 3.0}}, 500, 1.5, 1);
  GmmFitOptions o;
  o.mixtures = 1;
  const auto g = gmm_fit(x, o).gmm;
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, j);
    m /= x.rows();
    for (std::size_t i = 0; i < x.rows(); ++i) v += (x(i, j) - m) * (x(i, j) - m);
    v /= x.rows();
    EXPECT_NEAR(g.means(0, j), m, 1e-9);
    EXPECT_NEAR(g.variances(0, j), v, 1e-9);
  }
  EXPECT_DOUBLE_EQ(g.priors[0], 1.0);
}

TEST(Gmm, RecoversSeparatedClusters) {
  const auto x = gaussian_blobs({{-10.0, -10.0}, {10.0, 10.0}}, 1000, 1.0, 2);
  GmmFitOptions o;
  o.mixtures = 2;
  const auto g = gmm_fit(x, o).gmm;
  std::vector<double> m0 = {g.means(0, 0), g.means(0, 1)};
  std::vector<double> m1 = {g.means(1, 0), g.means(1, 1)};
  if (m0[0] > 0) std::swap(m0, m1);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(m0[j], -10.0, 0.1);
    EXPECT_NEAR(m1[j], 10.0, 0.1);
  }
}

TEST(Gmm, EmMonotoneOnThreeDatasets) {
  expect_em_monotone(gaussian_blobs({{0, 0}, {3, 1}, {-2, 4}}, 300, 1.0, 3), 3, 1);
  expect_em_monotone(gaussian_blobs({{0, 0, 0, 0}, {1, 1, 1, 1}}, 400, 2.0, 4), 8, 2);
  Rng rng(5);
  Matrix u(800, 3);
  for (auto& v : u.data()) v = rng.uniform(-1, 1);
  expect_em_monotone(u, 5, 3);
}

TEST(Gmm, InvariantsAndDeterminism) {
  const auto x = gaussian_blobs({{0, 0}, {5, 5}, {0, 5}}, 200, 0.7, 6);
  GmmFitOptions o;
  o.mixtures = 6;
  o.seed = 42;
  const auto a = gmm_fit(x, o).gmm;
  const auto b = gmm_fit(x, o).gmm;
  EXPECT_EQ(a, b);
  double s = 0;
  for (double p : a.priors) {
    EXPECT_GE(p, 0.0);
    s += p;
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
  for (double v : a.variances.data()) EXPECT_GE(v, o.variance_floor);
}

TEST(Gmm, VarianceFloorAndEmptyClusters) {
  // many duplicates: more mixtures than distinct points
  Matrix x(40, 1);
  for (std::size_t i = 0; i < 40; ++i) x(i, 0) = static_cast<double>(i % 3);
  GmmFitOptions o;
  o.mixtures = 5;
  const auto r = gmm_fit(x, o);
  for (double v : r.gmm.variances.data()) EXPECT_GE(v, o.variance_floor);
  for (double m : r.gmm.means.data()) EXPECT_TRUE(std::isfinite(m));
}

TEST(Gmm, TooFewSamplesIsError) {
  Matrix x(3, 2, 1.0);
  GmmFitOptions o;
  o.mixtures = 4;
  EXPECT_THROW(gmm_fit(x, o), DataError);
}

TEST(RelativeProbs, SingleMixture) {
  Gmm g;
  g.means = Matrix(1, 2);
  g.variances = Matrix(1, 2, 1.0);
  g.priors = {1.0};
  const std::vector<double> c = {3.0, -1.0};
  const auto r = relative_probs(g, c);
  ASSERT_EQ(r.p.size(), 1u);
  EXPECT_DOUBLE_EQ(r.p[0], 1.0);
}

TEST(RelativeProbs, IdenticalMixturesSplitEvenly) {
  const auto g = two_mixture_1d(2.0, 2.0);
  const std::vector<double> c = {0.3};
  const auto r = relative_probs(g, c);
  EXPECT_DOUBLE_EQ(r.p[0], 0.5);
  EXPECT_DOUBLE_EQ(r.p[1], 0.5);
}

TEST(RelativeProbs, MatchesDensityRatio) {
  const auto g = two_mixture_1d(0.0, 4.0);
  for (double c : {1.0, 2.0, -0.5, 3.7}) {
    const double n0 = std::exp(-0.5 * c * c) / std::sqrt(2 * std::numbers::pi);
    const double n1 = std::exp(-0.5 * (c - 4) * (c - 4)) / std::sqrt(2 * std::numbers::pi);
    const std::vector<double> v = {c};
    const auto r = relative_probs(g, v);
    EXPECT_NEAR(r.p[0], n0 / (n0 + n1), 1e-12);
    EXPECT_NEAR(r.p[0], 1.0 / (1.0 + std::exp(4 * c - 8)), 1e-12);
    EXPECT_FALSE(r.underflow);
  }
}

TEST(RelativeProbs, FarPointStaysNormalized) {
  const auto g = two_mixture_1d(0.0, 4.0);
  const std::vector<double> far = {1e5};
  const auto r = relative_probs(g, far);
  EXPECT_NEAR(r.p[0] + r.p[1], 1.0, 1e-12);
  EXPECT_FALSE(r.underflow);
  EXPECT_NEAR(r.p[1], 1.0, 1e-12);
}

TEST(RelativeProbs, UnderflowGivesUniform) {
  const auto g = two_mixture_1d(0.0, 4.0);
  const std::vector<double> huge = {1e200};
  const auto r = relative_probs(g, huge);
  EXPECT_TRUE(r.underflow);
  EXPECT_DOUBLE_EQ(r.p[0], 0.5);
  EXPECT_DOUBLE_EQ(r.p[1], 0.5);
}

TEST(RelativeProbs, RandomModelsSumToOne) {
  Rng rng(8);
  Gmm g;
  g.means = Matrix(7, 4);
  g.variances = Matrix(7, 4);
  for (auto& v : g.means.data()) v = rng.gaussian(0, 3);
  for (auto& v : g.variances.data()) v = rng.uniform(0.1, 2);
  g.priors.assign(7, 0.0);
  double s = 0;
  for (auto& p : g.priors) s += (p = rng.uniform(0.1, 1));
  for (auto& p : g.priors) p /= s;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> c(4);
    for (auto& v : c) v = rng.gaussian(0, 5);
    const auto r = relative_probs(g, c);
    double sum = 0;
    for (double p : r.p) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(AvgSpectrum, OneHotSelectsMean) {
  Rng rng(9);
  Matrix z(5, 4), p(5, 3);
  for (auto& v : z.data()) v = rng.gaussian();
  for (std::size_t l = 0; l < 5; ++l) p(l, 1) = 1.0;
  const auto s = build_avg_spectrum(p, z);
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0;
    for (std::size_t l = 0; l < 5; ++l) m += z(l, j);
    EXPECT_NEAR(s.rows(1, j), m / 5, 1e-12);
    EXPECT_EQ(s.rows(0, j), 0.0);
  }
  EXPECT_EQ(s.used, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(s.occupancy[1], 5.0);
}

TEST(AvgSpectrum, UniformGivesGlobalMean) {
  Rng rng(10);
  Matrix z(6, 3), p(6, 4, 0.25);
  for (auto& v : z.data()) v = rng.gaussian();
  const auto s = build_avg_spectrum(p, z);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t j = 0; j < 3; ++j) {
      double g = 0;
      for (std::size_t l = 0; l < 6; ++l) g += z(l, j);
      EXPECT_NEAR(s.rows(m, j), g / 6, 1e-12);
    }
}

TEST(AvgSpectrum, ToyMatchesScalarLoops) {
  const Matrix p = [] {
    Matrix m(3, 2);
    m(0, 0) = 0.2; m(0, 1) = 0.8;
    m(1, 0) = 0.6; m(1, 1) = 0.4;
    m(2, 0) = 0.9; m(2, 1) = 0.1;
    return m;
  }();
  Rng rng(11);
  Matrix z(3, 5);
  for (auto& v : z.data()) v = rng.gaussian();
  AvgSpectrumOptions raw;
  raw.normalize = false;
  const auto a = build_avg_spectrum(p, z, raw);
  const auto b = build_avg_spectrum(p, z);
  for (std::size_t m = 0; m < 2; ++m) {
    double occ = 0;
    for (std::size_t l = 0; l < 3; ++l) occ += p(l, m);
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0;
      for (std::size_t l = 0; l < 3; ++l) s += p(l, m) * z(l, j);
      EXPECT_NEAR(a.rows(m, j), s, 1e-12);
      EXPECT_NEAR(b.rows(m, j), s / occ, 1e-12);
    }
  }
}

TEST(AvgSpectrum, InvariantToDuplicatingTrainingSet) {
  Rng rng(12);
  Matrix z(10, 4), p(10, 3);
  for (auto& v : z.data()) v = rng.gaussian();
  for (std::size_t l = 0; l < 10; ++l) {
    double s = 0;
    for (std::size_t m = 0; m < 3; ++m) s += (p(l, m) = rng.uniform());
    for (std::size_t m = 0; m < 3; ++m) p(l, m) /= s;
  }
  Matrix z2(20, 4), p2(20, 3);
  for (std::size_t l = 0; l < 20; ++l) {
    for (std::size_t j = 0; j < 4; ++j) z2(l, j) = z(l % 10, j);
    for (std::size_t m = 0; m < 3; ++m) p2(l, m) = p(l % 10, m);
  }
  const auto a = build_avg_spectrum(p, z), b = build_avg_spectrum(p2, z2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_NEAR(a.rows.data()[i], b.rows.data()[i], 1e-9);
}

TEST(AvgSpectrum, ZeroFramesIsError) {
  EXPECT_THROW(build_avg_spectrum(Matrix(0, 2), Matrix(0, 3)), DataError);
}

TEST(IdealSpeech, OneHotAndConvexity) {
  Rng rng(13);
  AvgSpeechSpectrum dict;
  dict.rows = Matrix(3, 6);
  for (auto& v : dict.rows.data()) v = rng.gaussian(0, 5);
  Matrix onehot(3, 3);
  onehot(0, 2) = onehot(1, 0) = onehot(2, 1) = 1.0;
  const auto s = ideal_speech(onehot, dict);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(s(0, j), dict.rows(2, j));
    EXPECT_EQ(s(1, j), dict.rows(0, j));
    EXPECT_EQ(s(2, j), dict.rows(1, j));
  }
  Matrix p(20, 3);
  for (std::size_t l = 0; l < 20; ++l) {
    double t = 0;
    for (std::size_t m = 0; m < 3; ++m) t += (p(l, m) = rng.uniform());
    for (std::size_t m = 0; m < 3; ++m) p(l, m) /= t;
  }
  const auto mix = ideal_speech(p, dict);
  for (std::size_t l = 0; l < 20; ++l)
    for (std::size_t j = 0; j < 6; ++j) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t m = 0; m < 3; ++m) {
        lo = std::min(lo, dict.rows(m, j));
        hi = std::max(hi, dict.rows(m, j));
      }
      EXPECT_GE(mix(l, j), lo - 1e-12);
      EXPECT_LE(mix(l, j), hi + 1e-12);
      double want = 0;
      for (std::size_t m = 0; m < 3; ++m) want += p(l, m) * dict.rows(m, j);
      EXPECT_NEAR(mix(l, j), want, 1e-12);
    }
}

TEST(MeanNormalizeRows, ZeroMeanRows) {
  Rng rng(14);
  Matrix x(4, 9);
  for (auto& v : x.data()) v = rng.gaussian(3, 2);
  const auto z = mean_normalize_rows(x);
  for (std::size_t l = 0; l < 4; ++l) {
    double s = 0;
    for (double v : z.row(l)) s += v;
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
}
