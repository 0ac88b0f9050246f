#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "unlearn/logistic.hpp"

namespace unlearn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Labels = Eigen::VectorXi;

/// Feature matrix (one row per example) plus integer labels.
///
/// Binary problems store labels in {-1, +1}; multiclass problems store
/// class ids in {0, ..., K-1}. `scale` is the constant the raw features were
/// divided by during normalization (1 if the data was never normalized).
struct Dataset {
  Matrix features;
  Labels labels;
  double scale = 1.0;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  bool empty() const { return features.rows() == 0; }

  /// Throws std::invalid_argument if labels and features disagree in length.
  void validate() const;
  bool is_binary() const;
  double max_row_norm() const;

  Dataset subset(std::span<const Index> rows) const;
  /// Every row except `rows` (which must be valid and unique), order preserved.
  Dataset without(std::span<const Index> rows) const;
};

/// Stacks `a` on top of `b`. Dimensions must agree.
Dataset concat(const Dataset& a, const Dataset& b);

/// Binary view for one-vs-rest head `positive_class`: +1 for that class, -1 otherwise.
Dataset one_vs_rest(const Dataset& data, int positive_class);

/// Regularized empirical risk with the l2 term summed once per example:
/// sum_i [ l(theta^T x_i, y_i) + lambda/2 ||theta||^2 ].
double risk(const Vector& theta, const Dataset& data, double lambda);

/// risk + b^T theta.
double perturbed_risk(const Vector& theta, const Dataset& data, double lambda, const Vector& b);

/// Gradient of risk, plus b when supplied.
Vector risk_gradient(const Vector& theta, const Dataset& data, double lambda,
                     const Vector* b = nullptr);

/// X^T diag(l''(X theta)) X + |D| lambda I. The linear perturbation does not contribute.
Matrix risk_hessian(const Vector& theta, const Dataset& data, double lambda);

/// Solves H u = v by Cholesky. Throws NumericalError if H is not SPD.
Vector hessian_solve(const Matrix& hessian, const Vector& v);

struct SpectralNormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of `x` by power iteration on X^T X.
///
/// Starts from the first canonical basis vector. If the start vector turns
/// out to be invariant under X^T X on the very first step, a second run is
/// started from a vector drawn with `seed` and the larger estimate is kept.
SpectralNormResult spectral_norm(const Matrix& x, std::uint64_t seed = 0,
                                 double rel_tolerance = 1e-7, int max_iterations = 1000);

}  // namespace unlearn
