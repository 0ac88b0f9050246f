#pragma once

#include <cmath>

namespace unlearn {

// Scalar primitives of the logistic loss l(z, y) = log(1 + exp(-y z)) with
// y in {-1, +1}. Derivatives are taken with respect to the margin z.

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

/// 1 / (1 + exp(-t)) without overflow.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double logistic_loss(double z, double y) { return softplus(-y * z); }

inline double logistic_d1(double z, double y) { return -y * sigmoid(-y * z); }

// The curvature terms do not depend on y because y^2 = 1.
inline double logistic_d2(double z) { return sigmoid(z) * sigmoid(-z); }

inline double logistic_d3(double z) { return logistic_d2(z) * (1.0 - 2.0 * sigmoid(z)); }

/// max_z |l'''(z)| for the logistic loss, attained at z = log(2 +- sqrt(3)).
inline const double kLogisticGamma = 1.0 / (6.0 * std::sqrt(3.0));

enum class LossKind { logistic };

/// Loss family plus the Lipschitz constant of its second derivative.
struct LossFunction {
  LossKind kind = LossKind::logistic;
  double gamma = kLogisticGamma;
};

}  // namespace unlearn
