#pragma once

#include <span>
#include <vector>

#include "micclass/matrix.hpp"
#include "micclass/spectral.hpp"

namespace micclass {

struct MfccConfig {
  int n_mels = 26;
  int n_coeffs = 12;
  double fmin = 0.0;
  double fmax = 8000.0;
  bool rasta = true;
  // Subtract each coefficient trajectory's mean before RASTA filtering, which
  // removes the start-up transient of the zero-state filter.
  bool rasta_center = true;

  void validate(int sample_rate) const;
  friend bool operator==(const MfccConfig&, const MfccConfig&) = default;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequencies (Hz) of the n_mels triangular filters.
std::vector<double> mel_centers(const MfccConfig& cfg);

/// n_mels x (n_fft/2) triangular filterbank over spectrogram columns (FFT bins
/// 1..n_fft/2), HTK mel scale, each filter scaled to unit peak.
Matrix mel_filterbank(const MfccConfig& cfg, int n_fft, int sample_rate);

// Orthonormal DCT-II of a vector.
std::vector<double> dct2_orthonormal(std::span<const double> x);

/// Classic RASTA bandpass 0.1 (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.98 z^-1),
/// zero initial state.
std::vector<double> rasta_filter(std::span<const double> trajectory);

/// L x n_coeffs cepstra (c0 excluded) of the spectrogram frames.
Matrix mfcc(const LogPowerSpectrogram& spec, const MfccConfig& cfg);

}  // namespace micclass
