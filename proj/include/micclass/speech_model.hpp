#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "micclass/features.hpp"
#include "micclass/matrix.hpp"
#include "micclass/spectral.hpp"

namespace micclass {

/// Diagonal-covariance Gaussian mixture.
struct Gmm {
  Matrix means;      // M x D
  Matrix variances;  // M x D
  std::vector<double> priors;

  std::size_t mixtures() const { return means.rows(); }
  std::size_t dim() const { return means.cols(); }
  friend bool operator==(const Gmm&, const Gmm&) = default;
};

struct GmmFitOptions {
  int mixtures = 64;
  std::uint64_t seed = 1;
  int max_iters = 100;
  // Stop when (ll_t - ll_{t-1}) < tol * |ll_{t-1}|; tol = 0 runs all iterations.
  double tol = 1e-6;
  double variance_floor = 1e-4;
  int kmeans_iters = 10;
};

struct GmmFitResult {
  Gmm gmm;
  std::vector<double> log_likelihood;  // total, one entry per EM iteration
  bool converged = false;
};

/// EM from a k-means++ initialization. Features are rows of `data`.
GmmFitResult gmm_fit(const Matrix& data, const GmmFitOptions& opts);

// log(pi_m) + log N(x | mu_m, Sigma_m) for every mixture.
void log_joint(const Gmm& gmm, std::span<const double> x, std::span<double> out);

double total_log_likelihood(const Gmm& gmm, const Matrix& data);

struct RelativeProbs {
  std::vector<double> p;
  bool underflow = false;  // every density underflowed; p is uniform
};

/// Posterior mixture probabilities of one feature vector, computed in log space.
RelativeProbs relative_probs(const Gmm& gmm, std::span<const double> c);

// One row of relative probabilities per feature row.
Matrix relative_prob_matrix(const Gmm& gmm, const Matrix& features);

/// Per-mixture dictionary of mean-normalized log spectra.
struct AvgSpeechSpectrum {
  Matrix rows;                      // M x F (dB)
  std::vector<double> occupancy;    // sum of relative probabilities per mixture
  std::vector<std::uint8_t> used;   // occupancy above threshold

  friend bool operator==(const AvgSpeechSpectrum&, const AvgSpeechSpectrum&) = default;
};

struct AvgSpectrumOptions {
  // Divide each row by its occupancy. false gives the raw product P^t Z.
  bool normalize = true;
  double occupancy_epsilon = 1e-6;
  // RASTA warm-up frames dropped at the start of each clip.
  std::size_t skip_frames = 4;
  // Frames whose mean dB is below db_floor + margin count as silence.
  double silence_margin_db = 3.0;
};

// S = diag(occ)^-1 P^t Z from aligned probability (L x M) and normalized spectra (L x F).
AvgSpeechSpectrum build_avg_spectrum(const Matrix& probs, const Matrix& z,
                                     const AvgSpectrumOptions& opts = {});

struct SpeechModel;

// Dictionary from a training corpus of spectrograms; MFCCs are computed internally.
AvgSpeechSpectrum build_avg_spectrum(const Gmm& gmm,
                                     const std::vector<LogPowerSpectrogram>& corpus,
                                     const MfccConfig& mfcc_cfg,
                                     const AvgSpectrumOptions& opts = {});

// Mean-normalized copy of each row.
Matrix mean_normalize_rows(const Matrix& x);

bool is_silent_frame(std::span<const double> frame_db, double db_floor, double margin_db);

/// Ideal speech frames P_S * S; each output row is a convex combination of dictionary rows.
Matrix ideal_speech(const Matrix& probs, const AvgSpeechSpectrum& dict);

struct SpeechModel {
  Gmm gmm;
  AvgSpeechSpectrum avg_spectrum;
  MfccConfig mfcc_cfg;
  StftConfig stft_cfg;

  friend bool operator==(const SpeechModel&, const SpeechModel&) = default;
};

Matrix ideal_speech(const SpeechModel& model, const Matrix& features);

struct SpeechModelOptions {
  MfccConfig mfcc;
  GmmFitOptions gmm;
  AvgSpectrumOptions avg;
};

// MFCC extraction, GMM fit and dictionary build over a speech corpus.
SpeechModel train_speech_model(const std::vector<LogPowerSpectrogram>& corpus,
                               const SpeechModelOptions& opts);

// Non-silent frames after the warm-up skip, stacked across the corpus.
Matrix stack_training_features(const std::vector<LogPowerSpectrogram>& corpus,
                               const MfccConfig& cfg, const AvgSpectrumOptions& opts);

}  // namespace micclass
