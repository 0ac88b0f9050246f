#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace unlearn {

/// Factorization or linear solve failure (e.g. a matrix that is not SPD).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The quasi-Newton solver hit a non-finite objective or gradient.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd iterate)
      : std::runtime_error(what), iterate_(std::move(iterate)) {}

  const Eigen::VectorXd& iterate() const { return iterate_; }

 private:
  Eigen::VectorXd iterate_;
};

/// Malformed input file (bad magic, truncation, ragged rows, ...).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unlearn
