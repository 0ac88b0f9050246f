#include "unlearn/attack.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "unlearn/errors.hpp"

namespace unlearn {

void AttackConfig::validate() const {
  if (n_pgd < 0) throw std::invalid_argument("AttackConfig: n_pgd must be non-negative");
  if (eta0 && !(*eta0 > 0.0)) throw std::invalid_argument("AttackConfig: eta0 must be positive");
  if (!(bls_tau > 0.0 && bls_tau < 1.0) || !(bls_c > 0.0 && bls_c < 1.0)) {
    throw std::invalid_argument("AttackConfig: line-search tau and c must lie in (0, 1)");
  }
  if (!(dykstra_tol > 0.0) || n_proj <= 0 || bls_max_reductions <= 0) {
    throw std::invalid_argument("AttackConfig: projection settings must be positive");
  }
  for (const auto& c : constraints) {
    if (!(c.radius > 0.0)) throw std::invalid_argument("AttackConfig: constraint radius must be positive");
  }
}

namespace {

Dataset as_dataset(const Matrix& features, const Labels& labels) {
  Dataset d;
  d.features = features;
  d.labels = labels;
  return d;
}

Matrix curvature(const Matrix& x, const Vector& theta) {
  const Vector z = x * theta;
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) w(i) = logistic_d2(z(i));
  return x.transpose() * w.asDiagonal() * x;
}

}  // namespace

double cost_gradient_norm(const Vector& theta_hat, const Dataset& poison, double lambda) {
  if (poison.empty()) return 0.0;
  return risk_gradient(theta_hat, poison, lambda).norm();
}

double cost_influence_norm(const Vector& theta_hat, const Dataset& clean, const Dataset& poison, double lambda) {
  if (poison.empty()) return 0.0;
  const Dataset full = concat(clean, poison);
  return hessian_solve(risk_hessian(theta_hat, full, lambda), risk_gradient(theta_hat, poison, lambda)).norm();
}

double cost_grnb(const Vector& theta_hat, const Dataset& clean, const Dataset& poison, double lambda) {
  if (poison.empty() || clean.empty()) return 0.0;
  const Dataset full = concat(clean, poison);
  const Vector step =
      hessian_solve(risk_hessian(theta_hat, full, lambda), risk_gradient(theta_hat, poison, lambda));
  return spectral_norm(clean.features).value * step.norm() * (clean.features * step).norm();
}

Vector fit_unperturbed(const Dataset& data, double lambda, const Vector& theta0, const SolverConfig& solver) {
  const Objective objective = [&](const Vector& theta, Vector& grad) {
    grad = risk_gradient(theta, data, lambda);
    return risk(theta, data, lambda);
  };
  Vector theta = minimize(objective, theta0, solver).theta;

  // Newton refinement: the implicit gradient assumes exact stationarity.
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 8; ++k) {
    const Vector g = risk_gradient(theta, data, lambda);
    const double gn = g.norm();
    if (!(gn < previous)) break;
    previous = gn;
    const Vector step = hessian_solve(risk_hessian(theta, data, lambda), g);
    theta -= step;
    if (step.norm() <= 1e-15 * (1.0 + theta.norm())) break;
  }
  return theta;
}

struct PoisonObjective::Terms {
  Vector z, d1, d2;
  Vector poison_grad;
  Eigen::LLT<Matrix> hessian;
  bool have_hessian = false;
  Vector step;  // H^{-1} poison_grad
  double cost = 0.0;
};

PoisonObjective::PoisonObjective(Dataset clean, Labels poison_labels, double lambda, CostFunction cost,
                                 SolverConfig inner_solver)
    : clean_(std::move(clean)),
      poison_labels_(std::move(poison_labels)),
      lambda_(lambda),
      cost_(cost),
      inner_solver_(inner_solver) {
  clean_.validate();
  if (!(lambda_ > 0.0)) throw std::invalid_argument("PoisonObjective: lambda must be positive");
  if (clean_.empty()) throw std::invalid_argument("PoisonObjective: attacker data is empty");
  if (!clean_.is_binary() || !(poison_labels_.array() == 1 || poison_labels_.array() == -1).all()) {
    throw std::invalid_argument("PoisonObjective: labels must be in {-1, +1}");
  }
  if (cost_.kind == CostKind::grnb) {
    clean_spectral_norm_ = spectral_norm(clean_.features).value;
    clean_gram_ = clean_.features.transpose() * clean_.features;
  }
  if (cost_.ignore_model_dependence) {
    theta_ = fit_unperturbed(clean_, lambda_, Vector::Zero(clean_.dim()), inner_solver_);
    have_model_ = true;
    clean_curvature_ = curvature(clean_.features, theta_);
  }
}

void PoisonObjective::update_model(const Matrix& poison_features) {
  if (poison_features.rows() != poison_labels_.size() || poison_features.cols() != clean_.dim()) {
    throw std::invalid_argument("PoisonObjective: poison matrix has the wrong shape");
  }
  if (cost_.ignore_model_dependence) return;
  const Dataset full = concat(clean_, as_dataset(poison_features, poison_labels_));
  theta_ = fit_unperturbed(full, lambda_, have_model_ ? theta_ : Vector::Zero(clean_.dim()), inner_solver_);
  have_model_ = true;
  clean_curvature_ = curvature(clean_.features, theta_);
}

PoisonObjective::Terms PoisonObjective::evaluate(const Matrix& xp) const {
  Terms t;
  const Index m = xp.rows();
  const Index d = xp.cols();
  const double n = static_cast<double>(clean_.size() + m);

  t.z = xp * theta_;
  t.d1.resize(m);
  t.d2.resize(m);
  for (Index i = 0; i < m; ++i) {
    t.d1(i) = logistic_d1(t.z(i), poison_labels_(i));
    t.d2(i) = logistic_d2(t.z(i));
  }
  t.poison_grad = xp.transpose() * t.d1 + lambda_ * static_cast<double>(m) * theta_;

  const bool need_hessian = cost_.kind != CostKind::gradient_norm || !cost_.ignore_model_dependence;
  if (need_hessian) {
    Matrix h = clean_curvature_ + xp.transpose() * t.d2.asDiagonal() * xp;
    h.diagonal().array() += lambda_ * n;
    t.hessian.compute(h);
    if (t.hessian.info() != Eigen::Success) throw NumericalError("PoisonObjective: Hessian is not SPD");
    t.have_hessian = true;
  }

  switch (cost_.kind) {
    case CostKind::gradient_norm:
      t.cost = t.poison_grad.norm();
      break;
    case CostKind::influence_norm:
      t.step = t.hessian.solve(t.poison_grad);
      t.cost = t.step.norm();
      break;
    case CostKind::grnb: {
      t.step = t.hessian.solve(t.poison_grad);
      const double xu = std::sqrt(std::max(t.step.dot(clean_gram_ * t.step), 0.0));
      t.cost = clean_spectral_norm_ * t.step.norm() * xu;
      break;
    }
  }
  (void)d;
  return t;
}

double PoisonObjective::value(const Matrix& poison_features) {
  update_model(poison_features);
  if (poison_features.rows() == 0) return 0.0;
  return -evaluate(poison_features).cost;
}

Matrix PoisonObjective::gradient(const Matrix& xp) {
  update_model(xp);
  const Index m = xp.rows();
  const Index d = xp.cols();
  if (m == 0) return Matrix(0, d);
  const Terms t = evaluate(xp);

  // Vector-Jacobian product of the poison gradient g_p(theta, X_p) with w,
  // taken with respect to X_p: row i is l''_i (x_i . w) theta + l'_i w.
  const auto vjp = [&](const Vector& w) -> Matrix {
    const Vector xw = xp * w;
    return (t.d2.cwiseProduct(xw)) * theta_.transpose() + t.d1 * w.transpose();
  };
  // H_p w: the Jacobian of g_p with respect to theta, applied to w.
  const auto poison_hvp = [&](const Vector& w) -> Vector {
    return xp.transpose() * t.d2.cwiseProduct(xp * w) + lambda_ * static_cast<double>(m) * w;
  };

  Matrix d_x = Matrix::Zero(m, d);
  Vector d_theta = Vector::Zero(d);

  if (cost_.kind == CostKind::gradient_norm) {
    const double gn = t.poison_grad.norm();
    if (gn == 0.0) return Matrix::Zero(m, d);
    const Vector s = t.poison_grad / gn;
    d_x = vjp(s);
    if (!cost_.ignore_model_dependence) d_theta = poison_hvp(s);
  } else {
    // C = phi(u) with u = H^{-1} g_p. With e = dphi/du and v = H^{-1} e:
    // dC = v . dg_p - v^T dH u.
    const Vector& u = t.step;
    const double un = u.norm();
    if (un == 0.0) return Matrix::Zero(m, d);
    Vector e;
    if (cost_.kind == CostKind::influence_norm) {
      e = u / un;
    } else {
      const Vector gu = clean_gram_ * u;
      const double xu = std::sqrt(std::max(u.dot(gu), 0.0));
      e = xu * u / un;
      if (xu > 0.0) e += un * gu / xu;
      e *= clean_spectral_norm_;
    }
    const Vector v = t.hessian.solve(e);
    const Vector pu = xp * u;
    const Vector pv = xp * v;
    Vector d3(m);
    for (Index i = 0; i < m; ++i) d3(i) = logistic_d3(t.z(i));
    const Vector w3 = d3.cwiseProduct(pu).cwiseProduct(pv);

    d_x = vjp(v);
    d_x -= w3 * theta_.transpose();
    d_x -= t.d2.asDiagonal() * (pu * v.transpose() + pv * u.transpose());

    if (!cost_.ignore_model_dependence) {
      const Vector zc = clean_.features * theta_;
      const Vector cu = clean_.features * u;
      const Vector cv = clean_.features * v;
      Vector wc(zc.size());
      for (Index k = 0; k < zc.size(); ++k) wc(k) = logistic_d3(zc(k)) * cu(k) * cv(k);
      d_theta = poison_hvp(v) - clean_.features.transpose() * wc - xp.transpose() * w3;
    }
  }

  if (!cost_.ignore_model_dependence) {
    // Implicit path: d theta_hat / d X_p = -H^{-1} J_X g_p.
    d_x -= vjp(t.hessian.solve(d_theta));
  }
  return -d_x;
}

SummedObjective::SummedObjective(std::vector<std::unique_ptr<AttackObjective>> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw std::invalid_argument("SummedObjective: no parts");
}

double SummedObjective::value(const Matrix& x) {
  double total = 0.0;
  for (auto& p : parts_) total += p->value(x);
  return total;
}

Matrix SummedObjective::gradient(const Matrix& x) {
  Matrix total = parts_.front()->gradient(x);
  for (std::size_t i = 1; i < parts_.size(); ++i) total += parts_[i]->gradient(x);
  return total;
}

LineSearchResult backtracking_line_search(double eta, const Matrix& x, const Matrix& dx, const Matrix& g,
                                          const std::function<double(const Matrix&)>& f, double tau, double c,
                                          int max_reductions, std::optional<double> f_at_x) {
  constexpr double kFloor = 1e-12;
  LineSearchResult out;
  const double fx = f_at_x ? *f_at_x : (++out.evaluations, f(x));
  const double t = c * (g.array() * dx.array()).sum();
  int reductions = 0;
  while (true) {
    const double trial = f(x - eta * dx);
    ++out.evaluations;
    if (!(fx - trial < eta * t)) {
      out.accepted = true;
      break;
    }
    if (reductions == max_reductions || tau * eta < kFloor) break;
    eta *= tau;
    ++reductions;
  }
  out.eta = eta;
  return out;
}

PoisonBatch pgd_craft(const PoisonBatch& poison, const AttackConfig& config, AttackObjective& objective,
                      PgdReport* report) {
  config.validate();
  if (poison.features.rows() != poison.labels.size() || poison.features.rows() != poison.reference.rows() ||
      poison.features.cols() != poison.reference.cols()) {
    throw std::invalid_argument("pgd_craft: poison batch shapes disagree");
  }
  PgdReport local;
  PgdReport& rep = report ? *report : local;
  rep = PgdReport{};

  PoisonBatch out = poison;
  const Index m = poison.features.rows();
  const Index d = poison.features.cols();
  if (m == 0 || config.n_pgd == 0) {
    if (config.n_pgd == 0) rep.objective_trace.push_back(objective.value(out.features));
    return out;
  }

  const auto f = [&objective](const Matrix& x) { return objective.value(x); };
  const auto project = [&](const Matrix& x) {
    return dykstra_project(x, config.constraints, config.dykstra_tol, config.n_proj).x;
  };
  const double eta0 = config.initial_step(m, d);

  Matrix& x = out.features;
  double fx = f(x);
  rep.objective_trace.push_back(fx);
  for (int it = 0; it < config.n_pgd; ++it) {
    const Matrix g = objective.gradient(x);
    const double gn = g.norm();
    if (gn == 0.0) {
      rep.stationary = true;
      break;
    }
    const Matrix dx = g / gn;
    const LineSearchResult ls =
        backtracking_line_search(eta0, x, dx, g, f, config.bls_tau, config.bls_c, config.bls_max_reductions, fx);
    if (!ls.accepted) {
      rep.stalled = true;
      break;
    }
    // The Armijo test runs on the unprojected point; keep shrinking if the
    // projected point would not decrease f.
    double eta = ls.eta;
    bool moved = false;
    for (int k = 0; k <= config.bls_max_reductions; ++k) {
      Matrix candidate = project(x - eta * dx);
      const double fc = f(candidate);
      if (fc <= fx) {
        x = std::move(candidate);
        fx = fc;
        moved = true;
        break;
      }
      eta *= config.bls_tau;
    }
    if (!moved) {
      rep.stalled = true;
      break;
    }
    rep.objective_trace.push_back(fx);
    ++rep.iterations;
  }
  return out;
}

}  // namespace unlearn
