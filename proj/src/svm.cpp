#include "micclass/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "micclass/error.hpp"

namespace micclass {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return std::exp(-gamma * d);
}

double compute_gamma(const Matrix& x) {
  if (x.rows() < 2) throw DataError("compute_gamma: need at least two feature vectors");
  double mean = 0.0;
  for (double v : x.data()) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  if (!(var > 0.0)) throw DataError("compute_gamma: features have zero variance");
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

std::vector<double> FeatureNorm::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw DataError("feature dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

FeatureNorm fit_feature_norm(const Matrix& f) {
  FeatureNorm n;
  n.mean.assign(f.cols(), 0.0);
  n.scale.assign(f.cols(), 0.0);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < f.cols(); ++j) n.mean[j] += f(i, j);
  }
  for (double& m : n.mean) m /= static_cast<double>(f.rows());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t j = 0; j < f.cols(); ++j) {
      const double d = f(i, j) - n.mean[j];
      n.scale[j] += d * d;
    }
  }
  for (double& s : n.scale) {
    s = std::sqrt(s / static_cast<double>(f.rows()));
    if (!(s > 1e-12)) s = 1.0;
  }
  return n;
}

namespace {

// SMO for min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0 (WSS of Fan, Chen and Lin).
BinarySvm solve_binary(const Matrix& x, const std::vector<double>& y, double C, double gamma,
                       double tol, long max_iters) {
  const std::size_t n = x.rows();
  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) K(i, j) = K(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
  }
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  const auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };
  constexpr double kTau = 1e-12;
  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i < n && v < gmax) {
        const double b = gmax - v;
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    gap = (i < n && std::isfinite(gmin)) ? gmax - gmin : 0.0;
    if (gap < tol || j == n) break;
    if (iter >= max_iters) {
      throw ModelError("svm_train: SMO did not converge in " + std::to_string(max_iters) +
                       " iterations (KKT gap " + std::to_string(gap) + ")");
    }
    // Two-variable update along y_i a_i + y_j a_j = const.
    const double qii = K(i, i), qjj = K(j, j), qij = y[i] * y[j] * K(i, j);
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * K(t, i) * dai + y[j] * K(t, j) * daj);
    }
  }

  // rho from free vectors, else midpoint of the feasible interval.
  double sum_free = 0.0, ub = std::numeric_limits<double>::infinity(),
         lb = -std::numeric_limits<double>::infinity();
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0 && alpha[t] < C) {
      sum_free += yg;
      ++n_free;
    } else if ((alpha[t] >= C && y[t] < 0) || (alpha[t] <= 0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  BinarySvm m;
  m.bias = -rho;
  m.kkt_gap = gap;
  m.iterations = iter;
  std::vector<std::size_t> sv;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) sv.push_back(t);
  }
  m.support = Matrix(sv.size(), x.cols());
  for (std::size_t k = 0; k < sv.size(); ++k) {
    std::copy(x.row(sv[k]).begin(), x.row(sv[k]).end(), m.support.row(k).begin());
    m.alpha.push_back(alpha[sv[k]]);
    m.y.push_back(y[sv[k]]);
  }
  return m;
}

}  // namespace

SvmModel svm_train(const Matrix& features, const std::vector<std::string>& labels,
                   const SvmTrainOptions& opts) {
  if (features.rows() != labels.size()) throw DataError("svm_train: label count mismatch");
  if (!(opts.C > 0.0)) throw UsageError("svm_train: C must be positive");
  SvmModel model;
  model.C = opts.C;
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw DataError("svm_train: need at least two classes");
  for (const auto& [label, idx] : by_class) model.classes.push_back(label);

  model.norm = fit_feature_norm(features);
  Matrix normalized(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto z = model.norm.apply(features.row(i));
    std::copy(z.begin(), z.end(), normalized.row(i).begin());
  }
  model.gamma = opts.gamma > 0.0 ? opts.gamma : compute_gamma(normalized);

  const std::size_t k = model.classes.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto& ia = by_class[model.classes[a]];
      const auto& ib = by_class[model.classes[b]];
      Matrix x(ia.size() + ib.size(), features.cols());
      std::vector<double> y;
      std::size_t r = 0;
      for (std::size_t idx : ia) {
        std::copy(normalized.row(idx).begin(), normalized.row(idx).end(), x.row(r++).begin());
        y.push_back(1.0);
      }
      for (std::size_t idx : ib) {
        std::copy(normalized.row(idx).begin(), normalized.row(idx).end(), x.row(r++).begin());
        y.push_back(-1.0);
      }
      BinarySvm m = solve_binary(x, y, opts.C, model.gamma, opts.tol, opts.max_iters);
      m.pos = a;
      m.neg = b;
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

double decision_value(const BinarySvm& m, std::span<const double> x, double gamma) {
  double f = m.bias;
  for (std::size_t k = 0; k < m.alpha.size(); ++k) {
    f += m.alpha[k] * m.y[k] * rbf_kernel(m.support.row(k), x, gamma);
  }
  return f;
}

Prediction predict(const SvmModel& model, std::span<const double> x) {
  const auto z = model.norm.apply(x);
  Prediction p;
  p.votes.assign(model.classes.size(), 0);
  p.margins.assign(model.classes.size(), 0.0);
  for (const auto& m : model.machines) {
    const double f = decision_value(m, z, model.gamma);
    const std::size_t winner = f > 0 ? m.pos : m.neg;
    ++p.votes[winner];
    p.margins[winner] += std::abs(f);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.votes.size(); ++c) {
    if (p.votes[c] > p.votes[best] ||
        (p.votes[c] == p.votes[best] && p.margins[c] > p.margins[best])) {
      best = c;
    }
  }
  p.class_index = best;
  p.label = model.classes[best];
  return p;
}

}  // namespace micclass
