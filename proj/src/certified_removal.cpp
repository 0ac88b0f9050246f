#include "unlearn/certified_removal.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "unlearn/seeding.hpp"

namespace unlearn {

void RemovalBudget::validate() const {
  if (!(epsilon > 0.0 && delta > 0.0 && sigma > 0.0 && lambda > 0.0)) {
    throw std::invalid_argument("RemovalBudget: epsilon, delta, sigma and lambda must be positive");
  }
  if (!(delta < 1.0)) throw std::invalid_argument("RemovalBudget: delta must be below 1");
}

ModelState learn(const Dataset& data, const RemovalBudget& budget, std::uint64_t seed,
                 const DefenderOptions& options) {
  budget.validate();
  data.validate();
  if (data.empty()) throw std::invalid_argument("learn: dataset is empty");

  const Index d = data.dim();
  ModelState state;
  state.b.resize(d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, budget.sigma);
  for (Index i = 0; i < d; ++i) state.b(i) = normal(rng);

  const Vector& b = state.b;
  const double lambda = budget.lambda;
  const Objective objective = [&](const Vector& theta, Vector& grad) {
    grad = risk_gradient(theta, data, lambda, &b);
    return perturbed_risk(theta, data, lambda, b);
  };
  state.theta = minimize(objective, Vector::Zero(d), options.solver).theta;
  state.beta = 0.0;
  state.retrain_count = 0;
  return state;
}

double beta_trigger(const RemovalBudget& budget) {
  budget.validate();
  return budget.sigma * budget.epsilon / std::sqrt(2.0 * std::log(1.5 / budget.delta));
}

Vector influence_update(const Dataset& erase, const Dataset& full, const ModelState& state,
                        const RemovalBudget& budget) {
  if (erase.empty()) return Vector::Zero(state.theta.size());
  const Matrix h = risk_hessian(state.theta, full, budget.lambda);
  const Vector g = risk_gradient(state.theta, erase, budget.lambda);
  return hessian_solve(h, g);
}

Vector removal_step(const Dataset& erase, const Dataset& remaining, const ModelState& state,
                    const RemovalBudget& budget) {
  if (erase.empty()) return Vector::Zero(state.theta.size());
  const Matrix h = risk_hessian(state.theta, remaining, budget.lambda);
  const Vector g = risk_gradient(state.theta, erase, budget.lambda);
  return hessian_solve(h, g);
}

namespace {

Vector defender_step(const Dataset& erase, const Dataset& full, const Dataset& remaining, const ModelState& state,
                     const RemovalBudget& budget, const DefenderOptions& options) {
  return options.hessian == RemovalHessian::full ? influence_update(erase, full, state, budget)
                                                 : removal_step(erase, remaining, state, budget);
}

}  // namespace

double grn_increment(const Dataset& remaining, const Vector& delta_theta, double gamma) {
  const double step = delta_theta.norm();
  if (step == 0.0 || remaining.empty()) return 0.0;
  const double x_norm = spectral_norm(remaining.features).value;
  return gamma * x_norm * step * (remaining.features * delta_theta).norm();
}

double gradient_residual_norm(const ModelState& state, const Dataset& data, const RemovalBudget& budget) {
  return risk_gradient(state.theta, data, budget.lambda, &state.b).norm();
}

UnlearnResult unlearn(const ModelState& state, const Dataset& full, std::span<const Index> erase_rows,
                      const RemovalBudget& budget, std::uint64_t seed, const DefenderOptions& options) {
  budget.validate();
  const auto start = std::chrono::steady_clock::now();

  Dataset remaining = full.without(erase_rows);
  if (remaining.empty()) throw std::invalid_argument("unlearn: nothing would remain to retrain on");
  const Dataset erase = full.subset(erase_rows);

  UnlearnResult out;
  const Vector delta_theta = defender_step(erase, full, remaining, state, budget, options);
  out.outcome.beta_before = state.beta;
  const double beta = state.beta + grn_increment(remaining, delta_theta, options.loss.gamma);

  if (beta > beta_trigger(budget)) {
    out.state = learn(remaining, budget, seed, options);
    out.state.retrain_count = state.retrain_count + 1;
    out.outcome.kind = UpdateKind::retrained;
  } else {
    out.state = state;
    out.state.theta += delta_theta;
    out.state.beta = beta;
    out.outcome.kind = UpdateKind::approximate;
  }
  out.outcome.beta_after = out.state.beta;
  out.remaining = std::move(remaining);
  out.outcome.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

UnlearnResult unlearn(const ModelState& state, const Dataset& full, const Dataset& erase,
                      const RemovalBudget& budget, std::uint64_t seed, const DefenderOptions& options) {
  erase.validate();
  if (erase.dim() != full.dim() && !erase.empty()) {
    throw std::invalid_argument("unlearn: erase set has the wrong feature dimension");
  }
  std::vector<char> used(static_cast<std::size_t>(full.size()), 0);
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(erase.size()));
  for (Index i = 0; i < erase.size(); ++i) {
    Index match = -1;
    for (Index r = 0; r < full.size(); ++r) {
      if (!used[static_cast<std::size_t>(r)] && full.labels(r) == erase.labels(i) &&
          full.features.row(r) == erase.features.row(i)) {
        match = r;
        break;
      }
    }
    if (match < 0) {
      throw std::invalid_argument("unlearn: erase row " + std::to_string(i) + " is not in the training set");
    }
    used[static_cast<std::size_t>(match)] = 1;
    rows.push_back(match);
  }
  return unlearn(state, full, rows, budget, seed, options);
}

double CertifiedClassifier::max_beta() const {
  double m = 0.0;
  for (const auto& h : heads) m = std::max(m, h.beta);
  return m;
}

namespace {

Dataset head_view(const Dataset& data, const CertifiedClassifier& model, std::size_t head) {
  return model.binary() ? data : one_vs_rest(data, static_cast<int>(head));
}

CertifiedClassifier learn_heads(const Dataset& data, int num_classes, const RemovalBudget& budget,
                                std::uint64_t seed, const DefenderOptions& options) {
  CertifiedClassifier model;
  model.num_classes = num_classes;
  const std::size_t n_heads = num_classes == 2 && data.is_binary() ? 1 : static_cast<std::size_t>(num_classes);
  model.heads.resize(n_heads);
  for (std::size_t k = 0; k < n_heads; ++k) {
    const std::uint64_t head_seed = n_heads == 1 ? seed : derive_seed(seed, {k});
    const Dataset view = n_heads == 1 ? data : one_vs_rest(data, static_cast<int>(k));
    model.heads[k] = learn(view, budget, head_seed, options);
  }
  return model;
}

}  // namespace

CertifiedClassifier learn_classifier(const Dataset& data, int num_classes, const RemovalBudget& budget,
                                     std::uint64_t seed, const DefenderOptions& options) {
  if (num_classes < 2) throw std::invalid_argument("learn_classifier: need at least two classes");
  if (num_classes > 2 && data.is_binary()) {
    throw std::invalid_argument("learn_classifier: multiclass model needs class ids, not +-1 labels");
  }
  if (num_classes == 2 && !data.is_binary()) {
    throw std::invalid_argument("learn_classifier: binary model needs labels in {-1, +1}");
  }
  return learn_heads(data, num_classes, budget, seed, options);
}

ClassifierUnlearnResult unlearn_classifier(const CertifiedClassifier& model, const Dataset& full,
                                           std::span<const Index> erase_rows, const RemovalBudget& budget,
                                           std::uint64_t seed, const DefenderOptions& options) {
  budget.validate();
  const auto start = std::chrono::steady_clock::now();

  Dataset remaining = full.without(erase_rows);
  if (remaining.empty()) throw std::invalid_argument("unlearn: nothing would remain to retrain on");
  const Dataset erase = full.subset(erase_rows);
  const double trigger = beta_trigger(budget);

  ClassifierUnlearnResult out;
  out.outcome.beta_before = model.max_beta();
  CertifiedClassifier next = model;
  bool fire = false;
  for (std::size_t k = 0; k < model.heads.size(); ++k) {
    const Vector delta_theta = defender_step(head_view(erase, model, k), head_view(full, model, k),
                                             head_view(remaining, model, k), model.heads[k], budget, options);
    const double beta = model.heads[k].beta + grn_increment(remaining, delta_theta, options.loss.gamma);
    next.heads[k].theta += delta_theta;
    next.heads[k].beta = beta;
    fire = fire || beta > trigger;
  }

  if (fire) {
    out.model = learn_heads(remaining, model.num_classes, budget, seed, options);
    for (std::size_t k = 0; k < out.model.heads.size(); ++k) {
      out.model.heads[k].retrain_count = model.heads[k].retrain_count + 1;
    }
    out.outcome.kind = UpdateKind::retrained;
  } else {
    out.model = std::move(next);
    out.outcome.kind = UpdateKind::approximate;
  }
  out.outcome.beta_after = out.model.max_beta();
  out.remaining = std::move(remaining);
  out.outcome.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Labels predict(const CertifiedClassifier& model, const Matrix& features) {
  Labels out(features.rows());
  if (model.binary()) {
    const Vector score = features * model.heads.front().theta;
    for (Index i = 0; i < score.size(); ++i) out(i) = score(i) >= 0.0 ? 1 : -1;
    return out;
  }
  Matrix scores(features.rows(), static_cast<Index>(model.heads.size()));
  for (std::size_t k = 0; k < model.heads.size(); ++k) {
    scores.col(static_cast<Index>(k)) = features * model.heads[k].theta;
  }
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    out(i) = static_cast<int>(best);
  }
  return out;
}

}  // namespace unlearn
