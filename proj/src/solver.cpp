#include "unlearn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "unlearn/errors.hpp"

namespace unlearn {

void SolverConfig::validate() const {
  if (max_iterations <= 0 || grad_inf_tolerance <= 0.0 || history_size <= 0) {
    throw std::invalid_argument("SolverConfig: all settings must be positive");
  }
  if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw std::invalid_argument("SolverConfig: need 0 < c1 < c2 < 1");
  }
}

namespace {

struct Evaluator {
  const Objective& objective;

  double operator()(const Vector& x, Vector& g) const {
    const double f = objective(x, g);
    if (!std::isfinite(f) || !g.allFinite()) {
      throw SolverError("minimize: non-finite objective or gradient", x);
    }
    return f;
  }
};

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), safeguarded
// to lie inside the bracket.
double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

struct LineSearchPoint {
  double step = 0.0;
  double value = 0.0;
  Vector x;
  Vector grad;
};

// Strong Wolfe line search (bracketing followed by zoom).
bool strong_wolfe(const Evaluator& eval, const Vector& x0, double f0, double slope0, const Vector& dir,
                  double initial_step, const SolverConfig& cfg, LineSearchPoint& out) {
  constexpr int kMaxEvaluations = 40;
  const auto phi = [&](double t, LineSearchPoint& p) {
    p.step = t;
    p.x = x0 + t * dir;
    p.grad.resize(x0.size());
    p.value = eval(p.x, p.grad);
    return p.grad.dot(dir);
  };

  double t_prev = 0.0, f_prev = f0, d_prev = slope0;
  double t = initial_step;
  LineSearchPoint cur;
  int evals = 0;

  double lo = 0.0, f_lo = 0.0, d_lo = 0.0, hi = 0.0, f_hi = 0.0, d_hi = 0.0;
  // Best evaluated point satisfying sufficient decrease (the low end of the bracket).
  LineSearchPoint best_lo;
  bool have_lo_point = false;
  bool bracketed = false;
  while (evals < kMaxEvaluations) {
    const double dcur = phi(t, cur);
    ++evals;
    if (cur.value > f0 + cfg.wolfe_c1 * t * slope0 || (evals > 1 && cur.value >= f_prev)) {
      lo = t_prev, f_lo = f_prev, d_lo = d_prev;
      hi = t, f_hi = cur.value, d_hi = dcur;
      bracketed = true;
      break;
    }
    if (std::abs(dcur) <= -cfg.wolfe_c2 * slope0) {
      out = std::move(cur);
      return true;
    }
    best_lo = cur;
    have_lo_point = true;
    if (dcur >= 0.0) {
      lo = t, f_lo = cur.value, d_lo = dcur;
      hi = t_prev, f_hi = f_prev, d_hi = d_prev;
      bracketed = true;
      break;
    }
    t_prev = t, f_prev = cur.value, d_prev = dcur;
    t *= 2.0;
  }
  if (!bracketed) {
    if (!have_lo_point) return false;
    out = std::move(best_lo);
    return true;
  }
  while (evals < kMaxEvaluations) {
    const double tj = cubic_step(lo, f_lo, d_lo, hi, f_hi, d_hi);
    LineSearchPoint trial;
    const double dj = phi(tj, trial);
    ++evals;
    if (trial.value > f0 + cfg.wolfe_c1 * tj * slope0 || trial.value >= f_lo) {
      hi = tj, f_hi = trial.value, d_hi = dj;
    } else {
      if (std::abs(dj) <= -cfg.wolfe_c2 * slope0) {
        out = std::move(trial);
        return true;
      }
      if (dj * (hi - lo) >= 0.0) {
        hi = lo, f_hi = f_lo, d_hi = d_lo;
      }
      lo = tj, f_lo = trial.value, d_lo = dj;
      best_lo = std::move(trial);
      have_lo_point = true;
    }
    if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
  }
  // Fall back to the best point satisfying sufficient decrease, if any.
  if (have_lo_point && best_lo.value < f0) {
    out = std::move(best_lo);
    return true;
  }
  return false;
}

}  // namespace

SolverResult minimize(const Objective& objective, const Vector& theta0, const SolverConfig& config) {
  config.validate();
  const Evaluator eval{objective};
  const Index d = theta0.size();

  SolverResult result;
  Vector x = theta0;
  Vector g(d);
  double f = eval(x, g);

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  int iter = 0;
  double ginf = g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0;

  while (ginf > config.grad_inf_tolerance && iter < config.max_iterations) {
    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] = rho_hist[static_cast<std::size_t>(i)] * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Vector dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      // Lost descent (numerical); restart from steepest descent.
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

    LineSearchPoint next;
    bool ok = strong_wolfe(eval, x, f, slope, dir, initial_step, config, next);
    if (!ok && !s_hist.empty()) {
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
      ok = strong_wolfe(eval, x, f, slope, dir, std::min(1.0, 1.0 / g.norm()), config, next);
    }
    if (!ok) break;  // no further progress possible at working precision

    Vector s = next.x - x;
    Vector y = next.grad - g;
    x = std::move(next.x);
    g = std::move(next.grad);
    f = next.value;
    ++iter;
    ginf = g.lpNorm<Eigen::Infinity>();

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.history_size) {
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      }
    }
  }

  result.theta = std::move(x);
  result.value = f;
  result.report.iterations = iter;
  result.report.final_grad_inf_norm = ginf;
  result.report.converged = ginf <= config.grad_inf_tolerance;
  return result;
}

}  // namespace unlearn
