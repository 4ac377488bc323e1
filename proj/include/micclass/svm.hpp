#pragma once

#include <span>
#include <string>
#include <vector>

#include "micclass/matrix.hpp"

namespace micclass {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// gamma = 1 / (F * sigma^2), F the feature dimension and sigma^2 the pooled
/// variance of every component of the (already normalized) feature vectors.
double compute_gamma(const Matrix& normalized_features);

struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant dimensions

  std::vector<double> apply(std::span<const double> x) const;
  friend bool operator==(const FeatureNorm&, const FeatureNorm&) = default;
};

FeatureNorm fit_feature_norm(const Matrix& features);

/// One binary machine: decision(x) = sum coef_k K(sv_k, x) + bias, positive
/// means class `pos`.
struct BinarySvm {
  std::size_t pos = 0, neg = 0;
  Matrix support;               // normalized support vectors
  std::vector<double> alpha;    // in [0, C]
  std::vector<double> y;        // +1 / -1
  double bias = 0.0;
  double kkt_gap = 0.0;         // max violation m(a) - M(a) at exit
  long iterations = 0;

  friend bool operator==(const BinarySvm&, const BinarySvm&) = default;
};

struct SvmModel {
  std::vector<std::string> classes;  // sorted
  std::vector<BinarySvm> machines;   // one per class pair (i < j)
  FeatureNorm norm;
  double gamma = 0.0;
  double C = 1.0;

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct SvmTrainOptions {
  double C = 1.0;
  double gamma = 0.0;  // <= 0 computes gamma from the normalized training features
  double tol = 1e-3;
  long max_iters = 10'000'000;
};

/// One-vs-one C-SVC trained with SMO (second-order working-set selection).
SvmModel svm_train(const Matrix& features, const std::vector<std::string>& labels,
                   const SvmTrainOptions& opts = {});

double decision_value(const BinarySvm& m, std::span<const double> normalized_x, double gamma);

struct Prediction {
  std::string label;
  std::size_t class_index = 0;
  std::vector<int> votes;        // per class
  std::vector<double> margins;   // summed |decision| of won duels, per class
};

Prediction predict(const SvmModel& model, std::span<const double> x);

}  // namespace micclass
