#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "unlearn/model.hpp"
#include "unlearn/projection.hpp"
#include "unlearn/solver.hpp"

namespace unlearn {

// Slow-down poisoning. The attacker modifies the features of m reference
// rows (labels untouched) so that erasing them later inflates the defender's
// gradient-residual bound. All quantities use the unperturbed risk R: the
// attacker never sees the defender's perturbation vector b.

enum class CostKind {
  grnb,            ///< ||X||_2 ||dtheta||_2 ||X dtheta||_2 over the clean rows
  influence_norm,  ///< ||H^{-1} grad R(theta; poison)||_2
  gradient_norm,   ///< ||grad R(theta; poison)||_2
};

struct CostFunction {
  CostKind kind = CostKind::influence_norm;
  /// Hold the model fixed at argmin R(theta; clean) instead of re-solving on clean + poison.
  bool ignore_model_dependence = true;
};

struct AttackConfig {
  CostFunction cost;
  std::vector<NormBallConstraint> constraints;
  int n_pgd = 10;
  /// Initial line-search step; defaults to m * d / 100 when unset.
  std::optional<double> eta0;
  double bls_tau = 0.5;
  double bls_c = 0.5;
  double dykstra_tol = 1e-6;
  int n_proj = 50;
  /// Maximum step reductions per line search.
  int bls_max_reductions = 40;

  double initial_step(Index m, Index d) const {
    return eta0.value_or(static_cast<double>(m * d) / 100.0);
  }
  void validate() const;
};

struct PoisonBatch {
  Matrix features;   // m x d, the crafted rows
  Labels labels;     // fixed to the reference labels
  Matrix reference;  // m x d, the rows crafting started from
};

/// Cost functions on explicit inputs. `clean` is D minus the poison rows, so
/// the full training set is clean + poison. Labels must be in {-1, +1}.
double cost_grnb(const Vector& theta_hat, const Dataset& clean, const Dataset& poison, double lambda);
double cost_influence_norm(const Vector& theta_hat, const Dataset& clean, const Dataset& poison, double lambda);
double cost_gradient_norm(const Vector& theta_hat, const Dataset& poison, double lambda);

/// Objective f(X_psn) minimized by projected gradient descent.
class AttackObjective {
 public:
  virtual ~AttackObjective() = default;
  virtual double value(const Matrix& poison_features) = 0;
  virtual Matrix gradient(const Matrix& poison_features) = 0;
};

/// f(X_psn) = -C(theta_hat, D_psn) for one binary model.
///
/// `clean` is the data the attacker believes the defender trains on besides
/// the poison (the actual clean rows for a white-box attacker, surrogate data
/// for a grey-box attacker). Gradients are exact: with model dependence, the
/// implicit path through theta_hat is added via one extra Hessian solve.
class PoisonObjective final : public AttackObjective {
 public:
  PoisonObjective(Dataset clean, Labels poison_labels, double lambda, CostFunction cost,
                  SolverConfig inner_solver = {});

  double value(const Matrix& poison_features) override;
  Matrix gradient(const Matrix& poison_features) override;

  /// Model used by the most recent evaluation.
  const Vector& model() const { return theta_; }
  const CostFunction& cost() const { return cost_; }

 private:
  struct Terms;

  void update_model(const Matrix& poison_features);
  Terms evaluate(const Matrix& poison_features) const;

  Dataset clean_;
  Labels poison_labels_;
  double lambda_;
  CostFunction cost_;
  SolverConfig inner_solver_;

  Vector theta_;
  bool have_model_ = false;
  // Cached clean-data quantities. The curvature term depends on theta and is
  // refreshed whenever theta changes.
  double clean_spectral_norm_ = 0.0;
  Matrix clean_gram_;
  Matrix clean_curvature_;
};

/// Sum of several objectives over the same poison matrix (one per one-vs-rest head).
class SummedObjective final : public AttackObjective {
 public:
  explicit SummedObjective(std::vector<std::unique_ptr<AttackObjective>> parts);

  double value(const Matrix& poison_features) override;
  Matrix gradient(const Matrix& poison_features) override;

 private:
  std::vector<std::unique_ptr<AttackObjective>> parts_;
};

/// argmin_theta R(theta; data), refined with Newton steps after L-BFGS so the
/// stationarity residual sits at working precision.
Vector fit_unperturbed(const Dataset& data, double lambda, const Vector& theta0,
                       const SolverConfig& solver = {});

struct LineSearchResult {
  double eta = 0.0;
  bool accepted = false;
  int evaluations = 0;
};

/// Armijo backtracking: shrink eta by tau while f(X) - f(X - eta dX) < eta * c <G, dX>_F.
/// Gives up after `max_reductions` reductions or once eta drops below 1e-12,
/// returning the last eta with accepted = false.
LineSearchResult backtracking_line_search(double eta, const Matrix& x, const Matrix& dx, const Matrix& g,
                                          const std::function<double(const Matrix&)>& f, double tau = 0.5,
                                          double c = 0.5, int max_reductions = 40,
                                          std::optional<double> f_at_x = std::nullopt);

struct PgdReport {
  std::vector<double> objective_trace;  // f at the start and after every iteration
  int iterations = 0;
  bool stationary = false;  // stopped on a zero gradient
  bool stalled = false;     // stopped because no step decreased f
};

/// Projected gradient descent with normalized gradients, backtracking line
/// search and Dykstra projection. Starts from poison.features.
PoisonBatch pgd_craft(const PoisonBatch& poison, const AttackConfig& config, AttackObjective& objective,
                      PgdReport* report = nullptr);

}  // namespace unlearn
