#pragma once

#include <vector>

#include "unlearn/model.hpp"

namespace unlearn {

enum class NormKind { l1, linf };

/// Row-wise norm ball: every row i of the poison matrix must satisfy
/// ||row_i(X) - row_i(center)||_p <= radius.
struct NormBallConstraint {
  NormKind p = NormKind::linf;
  Matrix center;
  double radius = 1.0;

  /// max_i ||row_i(X) - row_i(center)||_p - radius (<= 0 means feasible).
  double violation(const Matrix& x) const;
  /// Euclidean projection of every row onto its ball.
  Matrix project(const Matrix& x) const;
};

/// Euclidean projection of x onto {v : ||v - center||_p <= radius}.
Vector project_ball(const Vector& x, const Vector& center, NormKind p, double radius);

/// Euclidean projection onto the l1 ball of the given radius around the
/// origin, by expected-linear-time pivoting on the magnitudes.
Vector project_l1_ball(const Vector& v, double radius);

struct DykstraResult {
  Matrix x;
  int iterations = 0;
  bool converged = false;
};

/// Projection onto the intersection of the constraint sets by Dykstra's
/// alternating scheme with correction increments. Stops when the summed
/// squared change of the increments over one sweep drops below `tolerance`
/// or after `max_iterations` sweeps.
DykstraResult dykstra_project(const Matrix& x, const std::vector<NormBallConstraint>& constraints,
                              double tolerance = 1e-6, int max_iterations = 50);

}  // namespace unlearn
