#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unlearn/logistic.hpp"
#include "unlearn/model.hpp"
#include "unlearn/solver.hpp"

namespace unlearn {

/// Defender scalars: the (epsilon, delta) removal guarantee, the standard
/// deviation of the objective perturbation and the l2 regularization weight.
struct RemovalBudget {
  double epsilon = 1.0;
  double delta = 1e-4;
  double sigma = 10.0;
  double lambda = 1e-3;

  void validate() const;
};

/// Everything the defender keeps per binary model. `b` is private to the
/// defender and must never be handed to attack code.
struct ModelState {
  Vector theta;
  Vector b;
  double beta = 0.0;
  int retrain_count = 0;
};

enum class UpdateKind { approximate, retrained };

struct UnlearnOutcome {
  UpdateKind kind = UpdateKind::approximate;
  double beta_before = 0.0;
  double beta_after = 0.0;
  double wall_time_seconds = 0.0;
};

/// Which data the removal step's Hessian is taken over. `remaining` is the
/// Newton step on the post-removal objective, the form under which the beta
/// increment bounds the residual. `full` is the pre-removal Hessian of
/// influence_update.
enum class RemovalHessian { remaining, full };

struct DefenderOptions {
  LossFunction loss;
  SolverConfig solver;
  RemovalHessian hessian = RemovalHessian::remaining;
};

/// Draws b ~ N(0, sigma^2 I) from `seed`, minimizes the perturbed risk from
/// zero and returns the state with beta = 0.
ModelState learn(const Dataset& data, const RemovalBudget& budget, std::uint64_t seed,
                 const DefenderOptions& options = {});

/// sigma * epsilon / sqrt(2 ln(1.5 / delta)).
double beta_trigger(const RemovalBudget& budget);

/// Newton step removing `erase` from `full`:
/// H_theta R_b(theta; full)^{-1} grad_theta R(theta; erase).
Vector influence_update(const Dataset& erase, const Dataset& full, const ModelState& state,
                        const RemovalBudget& budget);

/// H_theta R(theta; remaining)^{-1} grad_theta R(theta; erase).
Vector removal_step(const Dataset& erase, const Dataset& remaining, const ModelState& state,
                    const RemovalBudget& budget);

/// gamma ||X||_2 ||dtheta||_2 ||X dtheta||_2 for X = remaining.features.
double grn_increment(const Dataset& remaining, const Vector& delta_theta, double gamma);

/// ||grad R_b(theta; data)||_2, the quantity beta upper-bounds.
double gradient_residual_norm(const ModelState& state, const Dataset& data, const RemovalBudget& budget);

struct UnlearnResult {
  ModelState state;
  Dataset remaining;
  UnlearnOutcome outcome;
};

/// Removes rows `erase_rows` of `full`. Applies the approximate update unless
/// the accumulated bound exceeds beta_trigger, in which case the model is
/// retrained on the remaining data with a fresh perturbation drawn from `seed`.
UnlearnResult unlearn(const ModelState& state, const Dataset& full, std::span<const Index> erase_rows,
                      const RemovalBudget& budget, std::uint64_t seed, const DefenderOptions& options = {});

/// Same, with the erased examples given by value. Each must match a distinct
/// row of `full` exactly (features and label); std::invalid_argument otherwise.
UnlearnResult unlearn(const ModelState& state, const Dataset& full, const Dataset& erase,
                      const RemovalBudget& budget, std::uint64_t seed, const DefenderOptions& options = {});

// One-vs-rest wrapper used for multiclass data. A binary dataset (labels in
// {-1, +1}) gets a single head trained on the labels as given.
struct CertifiedClassifier {
  int num_classes = 2;
  std::vector<ModelState> heads;

  bool binary() const { return heads.size() == 1; }
  int retrain_count() const { return heads.empty() ? 0 : heads.front().retrain_count; }
  /// Largest tracked bound over all heads.
  double max_beta() const;
};

CertifiedClassifier learn_classifier(const Dataset& data, int num_classes, const RemovalBudget& budget,
                                     std::uint64_t seed, const DefenderOptions& options = {});

struct ClassifierUnlearnResult {
  CertifiedClassifier model;
  Dataset remaining;
  UnlearnOutcome outcome;
};

/// Per-head approximate updates; if any head's bound exceeds the trigger,
/// every head is retrained on the remaining data.
ClassifierUnlearnResult unlearn_classifier(const CertifiedClassifier& model, const Dataset& full,
                                           std::span<const Index> erase_rows, const RemovalBudget& budget,
                                           std::uint64_t seed, const DefenderOptions& options = {});

/// Predicted labels: sign of theta^T x (ties to +1) for one head, argmax of
/// head scores (ties to the lowest class id) otherwise.
Labels predict(const CertifiedClassifier& model, const Matrix& features);

}  // namespace unlearn
