#pragma once

// RBF-kernel support vector machine: a binary SMO solver with second-order
// working-set selection, wrapped into a one-vs-rest multiclass model with
// z-score input scaling and a softmax confidence over the decision values.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pri/error.hpp"
#include "pri/numeric.hpp"
#include "pri/rng.hpp"

namespace pri::svm {

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d2);
}

inline Matrix kernel_matrix(const Matrix& x, double gamma) {
  Matrix k(x.rows, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < x.rows; ++j) {
      const double v = rbf(x.row(i), x.row(j), gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

struct BinarySolution {
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;          // decision = sum coef_i K(x_i, x) - rho
  std::size_t iterations = 0;
};

/// Solves the C-SVC dual on the sub-problem `idx` of a precomputed kernel matrix.
/// y holds +1/-1 per entry of idx.
inline BinarySolution solve_binary(const Matrix& kernel, std::span<const std::size_t> idx, std::span<const int> y,
                                   double c, double eps = 1e-3, std::size_t max_iter = 1000000) {
  const std::size_t n = idx.size();
  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto k = [&](std::size_t i, std::size_t j) { return kernel(idx[i], idx[j]); };
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  BinarySolution sol;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -kInf, gmax2 = -kInf;
    std::ptrdiff_t gi = -1, gj = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; gi = static_cast<std::ptrdiff_t>(t); }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; gi = static_cast<std::ptrdiff_t>(t); }
      }
    }
    if (gi < 0) break;
    const auto i = static_cast<std::size_t>(gi);
    double obj_min = kInf;
    for (std::size_t t = 0; t < n; ++t) {
      double diff = 0.0;
      if (y[t] == 1) {
        if (lower(t)) continue;
        diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
      } else {
        if (upper(t)) continue;
        diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
      }
      if (diff > 0.0) {
        double quad = k(i, i) + k(t, t) - 2.0 * y[i] * y[t] * k(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= obj_min) { obj_min = obj; gj = static_cast<std::ptrdiff_t>(t); }
      }
    }
    if (gmax + gmax2 < eps || gj < 0) break;
    const auto j = static_cast<std::size_t>(gj);

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }
  sol.iterations = iter;

  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.coef.resize(n);
  for (std::size_t t = 0; t < n; ++t) sol.coef[t] = alpha[t] * y[t];
  return sol;
}

/// Column-wise z-score; zero-variance columns get unit scale.
struct Scaler {
  std::vector<double> mean, scale;

  static Scaler fit(const Matrix& x) {
    Scaler s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 1.0);
    if (x.rows == 0) return s;
    for (std::size_t c = 0; c < x.cols; ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) m += x(r, c);
      m /= static_cast<double>(x.rows);
      double v = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) v += (x(r, c) - m) * (x(r, c) - m);
      v /= static_cast<double>(x.rows);
      s.mean[c] = m;
      s.scale[c] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - mean[c]) / scale[c];
    return out;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    }
    return out;
  }
};

inline std::vector<double> softmax(std::span<const double> z, double temperature = 1.0) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp((z[k] - m) / temperature);
    s += p[k];
  }
  for (double& v : p) v /= s;
  return p;
}

/// One-vs-rest multiclass RBF SVM over integer labels 0..n_classes-1 (as given
/// by `classes`, the sorted labels present in training).
struct OvrModel {
  std::vector<int> classes;
  double c = 1.0;
  double gamma = 1.0;
  double temperature = 1.0;
  Scaler scaler;
  Matrix support;                        // scaled training rows with nonzero coefficient somewhere
  std::vector<std::vector<double>> coef;  // [class][support row]
  std::vector<double> rho;

  std::vector<double> decision_values(std::span<const double> x) const {
    const auto xs = scaler.apply(x);
    std::vector<double> kv(support.rows);
    for (std::size_t r = 0; r < support.rows; ++r) kv[r] = rbf(support.row(r), xs, gamma);
    std::vector<double> f(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
      double s = -rho[k];
      for (std::size_t r = 0; r < support.rows; ++r) s += coef[k][r] * kv[r];
      f[k] = s;
    }
    return f;
  }

  /// (label, confidence) with confidence = max softmax(decision / temperature).
  std::pair<int, double> predict(std::span<const double> x) const {
    const auto f = decision_values(x);
    const auto p = softmax(f, temperature);
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    return {classes[best], p[best]};
  }
};

namespace detail {

struct RawOvr {
  std::vector<BinarySolution> per_class;
};

inline RawOvr train_ovr(const Matrix& kernel, std::span<const std::size_t> idx, std::span<const int> labels,
                        std::span<const int> classes, double c) {
  RawOvr out;
  std::vector<int> y(idx.size());
  for (int cls : classes) {
    for (std::size_t t = 0; t < idx.size(); ++t) y[t] = labels[idx[t]] == cls ? 1 : -1;
    out.per_class.push_back(solve_binary(kernel, idx, y, c));
  }
  return out;
}

inline std::vector<double> ovr_decision(const Matrix& kernel, const RawOvr& m, std::span<const std::size_t> train_idx,
                                        std::size_t query) {
  std::vector<double> f(m.per_class.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    double s = -m.per_class[k].rho;
    const auto& coef = m.per_class[k].coef;
    for (std::size_t t = 0; t < train_idx.size(); ++t) {
      if (coef[t] != 0.0) s += coef[t] * kernel(train_idx[t], query);
    }
    f[k] = s;
  }
  return f;
}

/// Temperature minimizing the softmax cross-entropy of held-out decision values.
inline double fit_temperature(const std::vector<std::vector<double>>& decisions, const std::vector<std::size_t>& truth) {
  if (decisions.empty()) return 1.0;
  auto nll = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
      const auto p = softmax(decisions[i], t);
      s -= std::log(std::max(p[truth[i]], 1e-300));
    }
    return s;
  };
  double best_t = 1.0, best = nll(1.0);
  for (int e = -60; e <= 20; ++e) {
    const double t = std::pow(10.0, e / 20.0);
    const double v = nll(t);
    if (v < best) { best = v; best_t = t; }
  }
  return best_t;
}

}  // namespace detail

struct TrainOptions {
  std::vector<double> c_grid{1.0, 10.0, 100.0};
  std::vector<double> gamma_factors{0.1, 1.0, 10.0};  // multiples of 1/n_features
  std::size_t folds = 3;
  std::uint64_t seed = 1;
};

/// Grid-searched OvR training. x rows are raw features, labels are class ids.
inline OvrModel train_ovr_svm(const Matrix& x, const std::vector<int>& labels, const TrainOptions& opt = {}) {
  if (x.rows != labels.size()) throw ArgumentError("train_ovr_svm: feature and label counts differ");
  if (x.rows == 0) throw InsufficientDataError("train_ovr_svm: no training samples");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InsufficientDataError("train_ovr_svm: need at least two classes");
  if (opt.c_grid.empty() || opt.gamma_factors.empty()) throw ConfigError("train_ovr_svm: empty search grid");

  OvrModel model;
  model.classes = classes;
  model.scaler = Scaler::fit(x);
  const Matrix xs = model.scaler.apply(x);
  const double base_gamma = 1.0 / static_cast<double>(std::max<std::size_t>(x.cols, 1));

  // Stratified folds.
  const std::size_t folds = std::max<std::size_t>(2, opt.folds);
  std::vector<std::size_t> fold(x.rows, 0);
  Rng rng(derive_seed(opt.seed, 17));
  for (int cls : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    shuffle(members, rng);
    for (std::size_t k = 0; k < members.size(); ++k) fold[members[k]] = k % folds;
  }
  auto class_pos = [&](int label) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
  };

  double best_acc = -1.0;
  double best_c = opt.c_grid.front(), best_gamma = base_gamma * opt.gamma_factors.front();
  std::vector<std::vector<double>> best_decisions;
  std::vector<std::size_t> best_truth;
  for (double gf : opt.gamma_factors) {
    const double gamma = base_gamma * gf;
    const Matrix kernel = kernel_matrix(xs, gamma);
    for (double c : opt.c_grid) {
      std::size_t correct = 0, total = 0;
      std::vector<std::vector<double>> decisions;
      std::vector<std::size_t> truth;
      for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < x.rows; ++i) (fold[i] == f ? test : train).push_back(i);
        if (test.empty() || train.empty()) continue;
        std::vector<int> present;
        for (std::size_t i : train) present.push_back(labels[i]);
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        if (present.size() < 2) continue;
        const auto raw = detail::train_ovr(kernel, train, labels, present, c);
        for (std::size_t q : test) {
          const auto fv = detail::ovr_decision(kernel, raw, train, q);
          const auto best = static_cast<std::size_t>(std::max_element(fv.begin(), fv.end()) - fv.begin());
          correct += present[best] == labels[q] ? 1 : 0;
          ++total;
          if (present.size() == classes.size()) {
            decisions.push_back(fv);
            truth.push_back(class_pos(labels[q]));
          }
        }
      }
      const double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
      if (acc > best_acc) {
        best_acc = acc;
        best_c = c;
        best_gamma = gamma;
        best_decisions = std::move(decisions);
        best_truth = std::move(truth);
      }
    }
  }

  model.c = best_c;
  model.gamma = best_gamma;
  model.temperature = detail::fit_temperature(best_decisions, best_truth);
  const Matrix kernel = kernel_matrix(xs, best_gamma);
  std::vector<std::size_t> all(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) all[i] = i;
  const auto raw = detail::train_ovr(kernel, all, labels, classes, best_c);

  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < x.rows; ++t) {
    for (const auto& s : raw.per_class) {
      if (s.coef[t] != 0.0) {
        keep.push_back(t);
        break;
      }
    }
  }
  model.support = Matrix(keep.size(), x.cols);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::copy(xs.row(keep[r]).begin(), xs.row(keep[r]).end(), model.support.row(r).begin());
  }
  for (const auto& s : raw.per_class) {
    std::vector<double> cf(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) cf[r] = s.coef[keep[r]];
    model.coef.push_back(std::move(cf));
    model.rho.push_back(s.rho);
  }
  return model;
}

}  // namespace pri::svm
