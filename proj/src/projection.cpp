#include "unlearn/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace unlearn {

Vector project_l1_ball(const Vector& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;

  // Find the soft threshold t with sum_i max(|v_i| - t, 0) = radius. The
  // candidate set U shrinks around a pivot each round; `s` and `rho` carry the
  // sum and count of magnitudes already known to lie above the threshold.
  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v(i));
  auto first = u.begin();
  auto last = u.end();
  double s = 0.0;
  double rho = 0.0;
  while (first != last) {
    const double pivot = *(first + (last - first) / 2);
    auto mid = std::partition(first, last, [pivot](double a) { return a >= pivot; });
    double ds = 0.0;
    for (auto it = first; it != mid; ++it) ds += *it;
    const double drho = static_cast<double>(mid - first);
    if ((s + ds) - (rho + drho) * pivot < radius) {
      s += ds;
      rho += drho;
      first = mid;
    } else {
      // Exclude the pivot itself so the range always shrinks.
      auto piv = std::find(first, mid, pivot);
      std::iter_swap(piv, mid - 1);
      last = mid - 1;
    }
  }
  const double theta = (s - radius) / rho;
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - theta, 0.0);
    out(i) = std::copysign(mag, v(i));
  }
  return out;
}

Vector project_ball(const Vector& x, const Vector& center, NormKind p, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
  if (x.size() != center.size()) throw std::invalid_argument("project_ball: dimension mismatch");
  if (p == NormKind::linf) {
    return x.array().max(center.array() - radius).min(center.array() + radius).matrix();
  }
  return center + project_l1_ball(x - center, radius);
}

double NormBallConstraint::violation(const Matrix& x) const {
  if (x.rows() != center.rows() || x.cols() != center.cols()) {
    throw std::invalid_argument("NormBallConstraint: center does not match the poison matrix");
  }
  if (x.rows() == 0) return -radius;
  const Matrix diff = x - center;
  const Vector norms = p == NormKind::l1 ? Vector(diff.cwiseAbs().rowwise().sum())
                                         : Vector(diff.cwiseAbs().rowwise().maxCoeff());
  return norms.maxCoeff() - radius;
}

Matrix NormBallConstraint::project(const Matrix& x) const {
  if (x.rows() != center.rows() || x.cols() != center.cols()) {
    throw std::invalid_argument("NormBallConstraint: center does not match the poison matrix");
  }
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    out.row(i) = project_ball(x.row(i).transpose(), center.row(i).transpose(), p, radius).transpose();
  }
  return out;
}

DykstraResult dykstra_project(const Matrix& x, const std::vector<NormBallConstraint>& constraints,
                              double tolerance, int max_iterations) {
  DykstraResult out;
  out.x = x;
  if (constraints.empty()) {
    out.converged = true;
    return out;
  }
  std::vector<Matrix> increments(constraints.size(), Matrix::Zero(x.rows(), x.cols()));
  double change = std::numeric_limits<double>::infinity();
  while (change >= tolerance && out.iterations < max_iterations) {
    change = 0.0;
    ++out.iterations;
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      const Matrix previous = increments[j];
      const Matrix z = out.x - previous;
      out.x = constraints[j].project(z);
      increments[j] = out.x - z;
      change += (previous - increments[j]).squaredNorm();
    }
  }
  out.converged = change < tolerance;
  return out;
}

}  // namespace unlearn
