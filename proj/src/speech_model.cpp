#include "micclass/speech_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "micclass/error.hpp"
#include "micclass/rng.hpp"

namespace micclass {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

// k-means++ seeding followed by Lloyd iterations. Returns centers and assignment.
Matrix kmeans(const Matrix& data, std::size_t k, int iters, Rng& rng,
              std::vector<std::size_t>& assign) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  Matrix centers(k, d);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy(data.row(first).begin(), data.row(first).end(), centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(data.row(i), centers.row(c - 1)));
      total += best[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= best[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    std::copy(data.row(pick).begin(), data.row(pick).end(), centers.row(c).begin());
  }

  assign.assign(n, 0);
  std::vector<double> dist(n);
  for (int it = 0; it < std::max(iters, 1); ++it) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      std::size_t bc = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(data.row(i), centers.row(c));
        if (dd < bd) {
          bd = dd;
          bc = c;
        }
      }
      assign[i] = bc;
      dist[i] = bd;
    }
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(assign[i]);
      const auto x = data.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Empty cluster: re-seed from the point farthest from its center.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(data.row(far).begin(), data.row(far).end(), centers.row(c).begin());
        dist[far] = 0.0;
        continue;
      }
      auto cr = centers.row(c);
      const auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) cr[j] = s[j] / static_cast<double>(counts[c]);
    }
  }
  // Final assignment against the last centers.
  for (std::size_t i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double dd = sq_dist(data.row(i), centers.row(c));
      if (dd < bd) {
        bd = dd;
        assign[i] = c;
      }
    }
  }
  return centers;
}

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

constexpr std::size_t kBlock = 4096;

}  // namespace

void log_joint(const Gmm& gmm, std::span<const double> x, std::span<double> out) {
  const std::size_t d = gmm.dim();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t m = 0; m < gmm.mixtures(); ++m) {
    const auto mu = gmm.means.row(m);
    const auto var = gmm.variances.row(m);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = x[j] - mu[j];
      acc += t * t / var[j] + std::log(var[j]);
    }
    const double prior = gmm.priors[m];
    out[m] = (prior > 0.0 ? std::log(prior) : -std::numeric_limits<double>::infinity()) -
             0.5 * (acc + static_cast<double>(d) * log2pi);
  }
}

double total_log_likelihood(const Gmm& gmm, const Matrix& data) {
  std::vector<double> lj(gmm.mixtures());
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    log_joint(gmm, data.row(i), lj);
    total += log_sum_exp(lj);
  }
  return total;
}

GmmFitResult gmm_fit(const Matrix& data, const GmmFitOptions& opts) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (opts.mixtures < 1) throw UsageError("gmm_fit: mixture count must be positive");
  const auto k = static_cast<std::size_t>(opts.mixtures);
  if (n < k) {
    throw DataError("gmm_fit: " + std::to_string(n) + " samples for " + std::to_string(k) +
                    " mixtures");
  }

  Rng rng(opts.seed);
  std::vector<std::size_t> assign;
  Gmm gmm;
  gmm.means = kmeans(data, k, opts.kmeans_iters, rng, assign);
  gmm.variances = Matrix(k, d, 0.0);
  gmm.priors.assign(k, 0.0);
  {
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      counts[c] += 1.0;
      const auto x = data.row(i);
      const auto mu = gmm.means.row(c);
      auto v = gmm.variances.row(c);
      for (std::size_t j = 0; j < d; ++j) v[j] += (x[j] - mu[j]) * (x[j] - mu[j]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto v = gmm.variances.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        v[j] = std::max(counts[c] > 0 ? v[j] / counts[c] : 1.0, opts.variance_floor);
      }
      gmm.priors[c] = std::max(counts[c], 1.0);
    }
    double s = 0.0;
    for (double p : gmm.priors) s += p;
    for (double& p : gmm.priors) p /= s;
  }

  GmmFitResult result;
  Matrix resp(std::min(n, kBlock), k);
  std::vector<double> block_ll(resp.rows());
  for (int it = 0; it < opts.max_iters; ++it) {
    std::vector<double> nk(k, 0.0);
    Matrix sx(k, d), sxx(k, d);
    double ll = 0.0;
    for (std::size_t start = 0; start < n; start += kBlock) {
      const std::size_t len = std::min(kBlock, n - start);
#pragma omp parallel for schedule(static)
      for (std::size_t b = 0; b < len; ++b) {
        auto r = resp.row(b);
        log_joint(gmm, data.row(start + b), r);
        const double lse = log_sum_exp(r);
        block_ll[b] = lse;
        for (double& v : r) v = std::exp(v - lse);
      }
      for (std::size_t b = 0; b < len; ++b) ll += block_ll[b];
      // Per-mixture accumulation in frame order keeps the sums deterministic.
#pragma omp parallel for schedule(static)
      for (std::size_t m = 0; m < k; ++m) {
        auto ax = sx.row(m);
        auto axx = sxx.row(m);
        double acc = nk[m];
        for (std::size_t b = 0; b < len; ++b) {
          const double r = resp(b, m);
          if (r == 0.0) continue;
          acc += r;
          const auto x = data.row(start + b);
          for (std::size_t j = 0; j < d; ++j) {
            ax[j] += r * x[j];
            axx[j] += r * x[j] * x[j];
          }
        }
        nk[m] = acc;
      }
    }
    result.log_likelihood.push_back(ll);
    if (it > 0 && opts.tol > 0.0) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (ll - prev < opts.tol * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }
    // M-step.
    for (std::size_t m = 0; m < k; ++m) {
      gmm.priors[m] = nk[m] / static_cast<double>(n);
      if (nk[m] < 1e-10) continue;  // keep the old shape of a vanished mixture
      auto mu = gmm.means.row(m);
      auto var = gmm.variances.row(m);
      for (std::size_t j = 0; j < d; ++j) {
        mu[j] = sx(m, j) / nk[m];
        var[j] = std::max(sxx(m, j) / nk[m] - mu[j] * mu[j], opts.variance_floor);
      }
    }
  }
  result.gmm = std::move(gmm);
  return result;
}

RelativeProbs relative_probs(const Gmm& gmm, std::span<const double> c) {
  if (c.size() != gmm.dim()) throw DataError("relative_probs: dimension mismatch");
  RelativeProbs out;
  out.p.resize(gmm.mixtures());
  log_joint(gmm, c, out.p);
  const double lse = log_sum_exp(out.p);
  if (!std::isfinite(lse)) {
    out.underflow = true;
    std::fill(out.p.begin(), out.p.end(), 1.0 / static_cast<double>(out.p.size()));
    return out;
  }
  for (double& v : out.p) v = std::exp(v - lse);
  return out;
}

Matrix relative_prob_matrix(const Gmm& gmm, const Matrix& features) {
  Matrix out(features.rows(), gmm.mixtures());
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < features.rows(); ++l) {
    const auto rp = relative_probs(gmm, features.row(l));
    std::copy(rp.p.begin(), rp.p.end(), out.row(l).begin());
  }
  return out;
}

Matrix mean_normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    for (double& v : row) v -= mean;
  }
  return out;
}

bool is_silent_frame(std::span<const double> frame_db, double db_floor, double margin_db) {
  double mean = 0.0;
  for (double v : frame_db) mean += v;
  mean /= static_cast<double>(frame_db.size());
  return mean < db_floor + margin_db;
}

AvgSpeechSpectrum build_avg_spectrum(const Matrix& probs, const Matrix& z,
                                     const AvgSpectrumOptions& opts) {
  if (probs.rows() == 0 || z.rows() == 0) throw DataError("build_avg_spectrum: zero frames");
  if (probs.rows() != z.rows()) throw DataError("build_avg_spectrum: frame count mismatch");
  const std::size_t frames = probs.rows();
  const std::size_t k = probs.cols();
  const std::size_t f = z.cols();
  AvgSpeechSpectrum out;
  out.rows = Matrix(k, f);
  out.occupancy.assign(k, 0.0);
  out.used.assign(k, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t m = 0; m < k; ++m) {
    auto row = out.rows.row(m);
    double occ = 0.0;
    for (std::size_t l = 0; l < frames; ++l) {
      const double p = probs(l, m);
      if (p == 0.0) continue;
      occ += p;
      const auto zr = z.row(l);
      for (std::size_t j = 0; j < f; ++j) row[j] += p * zr[j];
    }
    out.occupancy[m] = occ;
    out.used[m] = occ >= opts.occupancy_epsilon ? 1 : 0;
    if (opts.normalize) {
      if (out.used[m]) {
        for (double& v : row) v /= occ;
      } else {
        std::fill(row.begin(), row.end(), 0.0);
      }
    }
  }
  return out;
}

Matrix stack_training_features(const std::vector<LogPowerSpectrogram>& corpus,
                               const MfccConfig& cfg, const AvgSpectrumOptions& opts) {
  std::vector<double> rows;
  std::size_t count = 0;
  for (const auto& spec : corpus) {
    const Matrix feats = mfcc(spec, cfg);
    for (std::size_t l = opts.skip_frames; l < spec.frames(); ++l) {
      if (is_silent_frame(spec.values.row(l), spec.config.db_floor, opts.silence_margin_db)) continue;
      rows.insert(rows.end(), feats.row(l).begin(), feats.row(l).end());
      ++count;
    }
  }
  Matrix out(count, static_cast<std::size_t>(cfg.n_coeffs));
  out.data() = std::move(rows);
  return out;
}

AvgSpeechSpectrum build_avg_spectrum(const Gmm& gmm,
                                     const std::vector<LogPowerSpectrogram>& corpus,
                                     const MfccConfig& mfcc_cfg, const AvgSpectrumOptions& opts) {
  std::vector<std::size_t> keep_clip;
  std::vector<std::size_t> keep_frame;
  std::vector<Matrix> feats(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    feats[s] = mfcc(corpus[s], mfcc_cfg);
    for (std::size_t l = opts.skip_frames; l < corpus[s].frames(); ++l) {
      if (is_silent_frame(corpus[s].values.row(l), corpus[s].config.db_floor,
                          opts.silence_margin_db)) {
        continue;
      }
      keep_clip.push_back(s);
      keep_frame.push_back(l);
    }
  }
  if (keep_clip.empty()) throw DataError("build_avg_spectrum: zero frames");
  const std::size_t bins = corpus.front().bins();
  for (const auto& spec : corpus) {
    if (spec.bins() != bins) throw DataError("build_avg_spectrum: inconsistent bin counts");
  }
  Matrix probs(keep_clip.size(), gmm.mixtures());
  Matrix z(keep_clip.size(), bins);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < keep_clip.size(); ++i) {
    const auto& spec = corpus[keep_clip[i]];
    const auto rp = relative_probs(gmm, feats[keep_clip[i]].row(keep_frame[i]));
    std::copy(rp.p.begin(), rp.p.end(), probs.row(i).begin());
    const auto x = spec.values.row(keep_frame[i]);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(bins);
    auto zr = z.row(i);
    for (std::size_t j = 0; j < bins; ++j) zr[j] = x[j] - mean;
  }
  return build_avg_spectrum(probs, z, opts);
}

Matrix ideal_speech(const Matrix& probs, const AvgSpeechSpectrum& dict) {
  if (probs.cols() != dict.rows.rows()) throw DataError("ideal_speech: mixture count mismatch");
  const std::size_t frames = probs.rows();
  const std::size_t k = probs.cols();
  const std::size_t f = dict.rows.cols();
  Matrix out(frames, f);
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < frames; ++l) {
    auto o = out.row(l);
    for (std::size_t m = 0; m < k; ++m) {
      const double p = probs(l, m);
      if (p == 0.0) continue;
      const auto s = dict.rows.row(m);
      for (std::size_t j = 0; j < f; ++j) o[j] += p * s[j];
    }
  }
  return out;
}

Matrix ideal_speech(const SpeechModel& model, const Matrix& features) {
  if (features.cols() != model.gmm.dim()) throw DataError("ideal_speech: feature dimension mismatch");
  return ideal_speech(relative_prob_matrix(model.gmm, features), model.avg_spectrum);
}

SpeechModel train_speech_model(const std::vector<LogPowerSpectrogram>& corpus,
                               const SpeechModelOptions& opts) {
  if (corpus.empty()) throw DataError("train_speech_model: empty corpus");
  SpeechModel model;
  model.mfcc_cfg = opts.mfcc;
  model.stft_cfg = corpus.front().config;
  const Matrix feats = stack_training_features(corpus, opts.mfcc, opts.avg);
  model.gmm = gmm_fit(feats, opts.gmm).gmm;
  model.avg_spectrum = build_avg_spectrum(model.gmm, corpus, opts.mfcc, opts.avg);
  return model;
}

}  // namespace micclass
