#pragma once

#include <functional>

#include "unlearn/model.hpp"

namespace unlearn {

struct SolverConfig {
  int max_iterations = 1000;
  double grad_inf_tolerance = 1e-6;
  int history_size = 10;
  // Strong Wolfe constants.
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;

  void validate() const;
};

struct SolverReport {
  int iterations = 0;
  double final_grad_inf_norm = 0.0;
  bool converged = false;
};

/// Returns f(theta) and writes the exact gradient into `grad` (already sized).
using Objective = std::function<double(const Vector& theta, Vector& grad)>;

struct SolverResult {
  Vector theta;
  double value = 0.0;
  SolverReport report;
};

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// Stops when ||grad||_inf <= grad_inf_tolerance or after max_iterations,
/// whichever comes first. Throws SolverError if the objective or gradient
/// becomes non-finite.
SolverResult minimize(const Objective& objective, const Vector& theta0, const SolverConfig& config = {});

}  // namespace unlearn
