#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "micclass/matrix.hpp"

namespace micclass {

// Image denoisers for [0,1] spectrogram images. Every public denoiser clamps
// its output to [0,1].

struct TvParams {
  double lambda = 0.05;  // larger is smoother
  int max_iters = 300;
  double tol = 1e-7;     // duality gap per pixel
};

struct TvResult {
  Matrix u;
  std::vector<double> gaps;  // duality gap after each iteration
  int iterations = 0;
  bool converged = false;
};

/// Isotropic discrete TV, forward differences with replicate boundary.
double total_variation(const Matrix& u);

// 0.5 ||u - v||^2 + lambda TV(u).
double tv_objective(const Matrix& u, const Matrix& v, double lambda);

/// ROF model solved with Chambolle's dual projection iteration. The result is
/// not clamped; a warning flag (converged == false) is set at max_iters.
TvResult tv_minimize(const Matrix& v, const TvParams& p);
Matrix tv_denoise(const Matrix& v, const TvParams& p);

struct NlmParams {
  int patch_radius = 1;
  int search_radius = 5;
  double h = 0.06;
  double sigma_est = 0.03;
};

/// Non-local means with weights exp(-max(d^2 - 2 sigma^2, 0) / h^2), d^2 the
/// mean squared patch difference. Coordinates outside the image are clamped.
Matrix nlm_denoise(const Matrix& v, const NlmParams& p);

struct BilateralParams {
  double sigma_s = 0.1;  // photometric
  double sigma_c = 1.5;  // geometric
  int radius = 3;
};

Matrix bilateral_denoise(const Matrix& v, const BilateralParams& p);

enum class WaveletType : std::uint8_t { kHaar = 0, kDb2 = 1 };

struct WaveletParams {
  int levels = 3;
  WaveletType wavelet = WaveletType::kDb2;
  // Threshold LH/HL as well as HH at each level.
  bool all_orientations = true;
  // sigma_U = sqrt(max(mean(V^2) - sigma^2, 0)); false drops the subtraction.
  bool subtract_noise_variance = true;
};

struct DetailBands {
  Matrix lh;  // low vertical, high horizontal
  Matrix hl;  // high vertical, low horizontal
  Matrix hh;
};

struct WaveletPyramid {
  Matrix approx;
  std::vector<DetailBands> details;  // details[0] is the finest level
  std::size_t rows = 0;              // original image size
  std::size_t cols = 0;
  WaveletType wavelet = WaveletType::kDb2;
};

std::vector<double> wavelet_lowpass(WaveletType w);

/// Separable orthogonal periodized DWT. The image is symmetrically padded up to
/// a multiple of 2^levels first; idwt2 crops back to the original size.
WaveletPyramid dwt2(const Matrix& image, int levels, WaveletType w);
Matrix idwt2(const WaveletPyramid& pyr);

double soft_threshold(double v, double t);

struct BayesShrinkReport {
  double sigma = 0.0;
  std::vector<double> thresholds;  // per thresholded subband, finest first
};

Matrix bayes_shrink(const Matrix& v, const WaveletParams& p, BayesShrinkReport* report = nullptr);

}  // namespace micclass
