#include "unlearn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "unlearn/errors.hpp"

namespace unlearn {
namespace {

void check_compatible(const Vector& theta, const Dataset& data) {
  data.validate();
  if (data.empty()) throw std::invalid_argument("risk: dataset is empty");
  if (theta.size() != data.dim()) {
    throw std::invalid_argument("risk: theta has dimension " + std::to_string(theta.size()) +
                                " but features have " + std::to_string(data.dim()));
  }
  if (!data.is_binary()) throw std::invalid_argument("risk: labels must be in {-1, +1}");
}

}  // namespace

void Dataset::validate() const {
  if (labels.size() != features.rows()) {
    throw std::invalid_argument("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                                std::to_string(labels.size()) + " labels");
  }
}

bool Dataset::is_binary() const {
  return (labels.array() == 1 || labels.array() == -1).all();
}

double Dataset::max_row_norm() const {
  if (empty()) return 0.0;
  return features.rowwise().norm().maxCoeff();
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), dim());
  out.labels.resize(static_cast<Index>(rows.size()));
  out.scale = scale;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= size()) throw std::out_of_range("dataset: row index out of range");
    out.features.row(static_cast<Index>(i)) = features.row(r);
    out.labels(static_cast<Index>(i)) = labels(r);
  }
  return out;
}

Dataset Dataset::without(std::span<const Index> rows) const {
  std::vector<char> drop(static_cast<std::size_t>(size()), 0);
  for (Index r : rows) {
    if (r < 0 || r >= size()) throw std::out_of_range("dataset: row index out of range");
    if (drop[static_cast<std::size_t>(r)]) throw std::invalid_argument("dataset: duplicate row index");
    drop[static_cast<std::size_t>(r)] = 1;
  }
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(size()) - rows.size());
  for (Index r = 0; r < size(); ++r) {
    if (!drop[static_cast<std::size_t>(r)]) keep.push_back(r);
  }
  return subset(keep);
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dim() != b.dim()) throw std::invalid_argument("concat: feature dimensions differ");
  Dataset out;
  out.features.resize(a.size() + b.size(), a.dim());
  out.features << a.features, b.features;
  out.labels.resize(a.size() + b.size());
  out.labels << a.labels, b.labels;
  out.scale = a.scale;
  return out;
}

Dataset one_vs_rest(const Dataset& data, int positive_class) {
  Dataset out = data;
  out.labels = (data.labels.array() == positive_class).select(Labels::Ones(data.size()),
                                                              -Labels::Ones(data.size()));
  return out;
}

double risk(const Vector& theta, const Dataset& data, double lambda) {
  check_compatible(theta, data);
  const Vector z = data.features * theta;
  double total = 0.0;
  for (Index i = 0; i < z.size(); ++i) total += logistic_loss(z(i), data.labels(i));
  return total + 0.5 * lambda * static_cast<double>(data.size()) * theta.squaredNorm();
}

double perturbed_risk(const Vector& theta, const Dataset& data, double lambda, const Vector& b) {
  if (b.size() != theta.size()) throw std::invalid_argument("perturbed_risk: b has wrong dimension");
  return risk(theta, data, lambda) + b.dot(theta);
}

Vector risk_gradient(const Vector& theta, const Dataset& data, double lambda, const Vector* b) {
  check_compatible(theta, data);
  const Vector z = data.features * theta;
  Vector dl(z.size());
  for (Index i = 0; i < z.size(); ++i) dl(i) = logistic_d1(z(i), data.labels(i));
  Vector g = data.features.transpose() * dl;
  g += lambda * static_cast<double>(data.size()) * theta;
  if (b != nullptr) {
    if (b->size() != theta.size()) throw std::invalid_argument("risk_gradient: b has wrong dimension");
    g += *b;
  }
  return g;
}

Matrix risk_hessian(const Vector& theta, const Dataset& data, double lambda) {
  check_compatible(theta, data);
  const Vector z = data.features * theta;
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) w(i) = logistic_d2(z(i));
  Matrix h = data.features.transpose() * w.asDiagonal() * data.features;
  h.diagonal().array() += lambda * static_cast<double>(data.size());
  return h;
}

Vector hessian_solve(const Matrix& hessian, const Vector& v) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != v.size()) {
    throw std::invalid_argument("hessian_solve: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("hessian_solve: matrix is not symmetric positive definite");
  }
  return llt.solve(v);
}

namespace {

SpectralNormResult power_iteration(const Matrix& x, Vector v, double tol, int max_iter) {
  SpectralNormResult out;
  double lambda = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = x.transpose() * (x * v);
    const double next = v.dot(w);  // Rayleigh quotient, v has unit norm
    const double wn = w.norm();
    out.iterations = it;
    if (wn == 0.0) {
      lambda = 0.0;
      out.converged = true;
      break;
    }
    v = w / wn;
    if (it > 1 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      out.converged = true;
      break;
    }
    lambda = next;
  }
  out.value = std::sqrt(std::max(lambda, 0.0));
  return out;
}

}  // namespace

SpectralNormResult spectral_norm(const Matrix& x, std::uint64_t seed, double rel_tolerance,
                                 int max_iterations) {
  if (x.size() == 0) throw std::invalid_argument("spectral_norm: empty matrix");
  const Index d = x.cols();
  Vector start = Vector::Unit(d, 0);

  // A start vector that X^T X maps onto a multiple of itself is an
  // eigenvector, but not necessarily the dominant one.
  const Vector w = x.transpose() * (x * start);
  const double along = w(0);
  const bool stagnant = (w - along * start).norm() <= rel_tolerance * std::max(w.norm(), 1e-300);

  SpectralNormResult result = power_iteration(x, start, rel_tolerance, max_iterations);
  if (stagnant && d > 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector r(d);
    for (Index i = 0; i < d; ++i) r(i) = normal(rng);
    r.normalize();
    SpectralNormResult second = power_iteration(x, r, rel_tolerance, max_iterations);
    second.iterations += result.iterations;
    if (second.value > result.value) result = second;
  }
  return result;
}

}  // namespace unlearn
