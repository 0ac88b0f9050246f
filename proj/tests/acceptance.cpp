// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. End-to-end criteria share one set of experiment runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "unlearn/attack.hpp"
#include "unlearn/certified_removal.hpp"
#include "unlearn/harness.hpp"
#include "unlearn/projection.hpp"

using namespace unlearn;
using namespace testutil;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome beta_soundness() {
  std::mt19937_64 rng(2024);
  const RemovalBudget budget;
  double worst = -1e300;
  int approximate = 0, sequences = 0;
  for (int seq = 0; seq < 120; ++seq, ++sequences) {
    const Index n = 40 + (seq * 13) % 161, d = 2 + seq % 19;
    Dataset current = random_dataset(n, d, rng);
    ModelState state = learn(current, budget, seq);
    for (int k = 0; k < 20 && current.size() > 1; ++k) {
      std::uniform_int_distribution<Index> pick(0, current.size() - 1);
      const Index rows[] = {pick(rng)};
      const auto r = unlearn::unlearn(state, current, rows, budget, 10000 + k);
      if (r.outcome.kind == UpdateKind::approximate) {
        ++approximate;
        worst = std::max(worst, gradient_residual_norm(r.state, r.remaining, budget) - r.state.beta);
      }
      state = r.state;
      current = r.remaining;
    }
  }
  return {worst <= 1e-5 && approximate > 0,
          fmt("%g sequences, %g approximate updates, max(GRN - beta) = %.3g", sequences, approximate, worst)};
}

Outcome attacker_gradient() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int checked = 0;
  for (CostKind kind : {CostKind::grnb, CostKind::influence_norm, CostKind::gradient_norm}) {
    for (bool ignore : {true, false}) {
      for (int trial = 0; trial < 20; ++trial, ++checked) {
        const Index n = 20 + (trial * 11) % 41, d = 2 + trial % 7, m = 1 + trial % 3;
        const Dataset clean = random_dataset(n, d, rng);
        const Dataset poison = random_dataset(m, d, rng);
        PoisonObjective obj(clean, poison.labels, 1e-2, {kind, ignore});
        const Matrix g = obj.gradient(poison.features);
        const Matrix fd = fd_gradient([&](const Matrix& x) { return obj.value(x); }, poison.features, 1e-5);
        worst = std::max(worst, rel_error(g, fd));
      }
    }
  }
  return {worst <= 1e-4, fmt("%g instances, max relative error %.3g", checked, worst)};
}

Outcome projection_oracles() {
  std::mt19937_64 rng(5);
  double l1 = 0.0, linf = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Index d = 1 + trial % 5;
    const Vector c = random_vector(d, rng);
    const Vector x = c + random_vector(d, rng, -3, 3);
    const double r = 0.05 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    l1 = std::max(l1, (project_ball(x, c, NormKind::l1, r) - (c + l1_projection_oracle(x - c, r))).norm());
    linf = std::max(linf, (project_ball(x, c, NormKind::linf, r) - linf_projection_oracle(x, c, r)).norm());
  }
  double infeasible = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 1 + trial % 3, d = 2 + trial % 6;
    const Matrix ref = random_matrix(m, d, rng, 0, 1);
    const std::vector<NormBallConstraint> cs = {{NormKind::linf, Matrix::Constant(m, d, 0.5), 0.5},
                                                {NormKind::l1, ref, 0.3 + 0.1 * (trial % 5)}};
    const auto r = dykstra_project(ref + random_matrix(m, d, rng, -2, 2), cs);
    for (const auto& c : cs) infeasible = std::max(infeasible, c.violation(r.x));
  }
  double boxes = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vector c1 = random_vector(3, rng, -0.5, 0.5), c2 = random_vector(3, rng, -0.5, 0.5);
    const NormBallConstraint a{NormKind::linf, c1.transpose(), 0.6}, b{NormKind::linf, c2.transpose(), 0.7};
    const Vector lo = (c1.array() - 0.6).max(c2.array() - 0.7), hi = (c1.array() + 0.6).min(c2.array() + 0.7);
    const Matrix x = random_matrix(1, 3, rng, -3, 3);
    const Vector want = x.row(0).transpose().array().max(lo.array()).min(hi.array());
    boxes = std::max(boxes, (dykstra_project(x, {a, b}, 1e-14, 1000).x.row(0).transpose() - want).norm());
  }
  return {l1 <= 1e-5 && linf <= 1e-5 && infeasible <= 1e-6 && boxes <= 1e-6,
          fmt("l1 %.2g, linf %.2g, Dykstra violation %.2g, two-box error %.2g", l1, linf, infeasible, boxes)};
}

Outcome trigger_value() {
  const double t = beta_trigger(RemovalBudget{});
  return {std::abs(t - 2.2803) <= 1e-3, fmt("beta_trigger = %.6f", t)};
}

Outcome influence_fidelity() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 25 + trial, d = 2 + trial % 5;
    const Dataset full = random_dataset(n, d, rng);
    RemovalBudget budget;
    budget.lambda = 1e-2 * (1 + trial % 4);
    ModelState state;
    state.b = random_vector(d, rng, -2, 2);
    state.theta = weighted_newton(full, Vector::Ones(n), budget.lambda, state.b);
    const Index row = trial % n;
    const Index rows[] = {row};
    const Vector step = influence_update(full.subset(rows), full, state, budget);
    const double h = 1e-4;
    Vector wp = Vector::Ones(n), wm = Vector::Ones(n);
    wp(row) += h;
    wm(row) -= h;
    const Vector oracle = -(weighted_newton(full, wp, budget.lambda, state.b) -
                            weighted_newton(full, wm, budget.lambda, state.b)) /
                          (2 * h);
    worst = std::max(worst, rel_error(step, oracle));
  }
  return {worst <= 1e-3, fmt("20 instances, max relative error %.3g", worst)};
}

Outcome bound_chain() {
  std::mt19937_64 rng(41);
  double worst = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset clean = random_dataset(10 + trial % 50, 1 + trial % 10, rng);
    const Dataset poison = random_dataset(1 + trial % 4, clean.dim(), rng);
    const double lambda = 1e-3 * (1 + trial % 7);
    const Vector theta = random_vector(clean.dim(), rng, -3, 3);
    const double size = static_cast<double>(clean.size() + poison.size());
    const double bound = cost_gradient_norm(theta, poison, lambda) / (lambda * (size - 1));
    worst = std::max(worst, cost_influence_norm(theta, clean, poison, lambda) - bound);
  }
  return {worst <= 1e-10, fmt("100 instances, max(influence - bound) = %.3g", worst)};
}

ExperimentConfig end_to_end(AttackMode mode) {
  ExperimentConfig c;
  c.synthetic.n = 2000;
  c.synthetic.d = 50;
  c.m_poison = 100;
  c.n_requests = 400;
  c.trials = 10;
  c.mode = mode;
  return c;
}

double standard_error(const Summary& s, int trials) { return s.stddev / std::sqrt(static_cast<double>(trials)); }

}  // namespace

int main() {
  std::printf("unlearning acceptance suite\n");
  report(1, "beta soundness", beta_soundness);
  report(2, "attacker gradient vs finite differences", attacker_gradient);
  report(3, "projection oracles and Dykstra", projection_oracles);
  report(4, "beta_trigger value", trigger_value);
  report(5, "influence fidelity", influence_fidelity);
  report(6, "surrogate bound chain", bound_chain);

  const ExperimentReport benign = run_experiment(end_to_end(AttackMode::benign));
  const ExperimentReport white = run_experiment(end_to_end(AttackMode::white_box));
  const int trials = 10;
  const double d = 50.0;

  report(7, "end-to-end slow-down", [&] {
    const double ratio = white.interval_first.mean / benign.interval_first.mean;
    return Outcome{ratio <= 0.5, fmt("benign %.1f (%g censored), attacked %.1f, ratio %.3f",
                                     benign.interval_first.mean, benign.censored_trials,
                                     white.interval_first.mean, ratio)};
  });

  report(8, "radius monotonicity", [&] {
    std::vector<Summary> rows;
    std::ostringstream detail;
    for (double r : {0.0, d / 200, d / 20, d / 2}) {
      ExperimentConfig c = end_to_end(AttackMode::white_box);
      c.radius = r;
      const Summary s = r == d / 20 ? white.interval_first : run_experiment(c).interval_first;
      rows.push_back(s);
      detail << "r=" << r << ": " << fmt("%.1f+-%.1f", s.mean, standard_error(s, trials)) << "  ";
    }
    bool ok = std::abs(rows[0].mean - benign.interval_first.mean) < 1e-12;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double slack = std::hypot(standard_error(rows[i - 1], trials), standard_error(rows[i], trials));
      ok = ok && rows[i].mean <= rows[i - 1].mean + slack;
    }
    return Outcome{ok, detail.str()};
  });

  report(9, "grey-box transfer", [&] {
    ExperimentConfig gc = end_to_end(AttackMode::grey_box);
    gc.surrogate_fraction = 0.2;
    ExperimentConfig wc = end_to_end(AttackMode::white_box);
    wc.surrogate_fraction = 0.2;
    const double grey = run_experiment(gc).interval_first.mean;
    const double wb = run_experiment(wc).interval_first.mean;
    return Outcome{grey <= 2.0 * wb, fmt("white %.1f, grey %.1f (20%% surrogate split)", wb, grey)};
  });

  report(10, "long-term retrain trend", [&] {
    const std::size_t from = 100 - 1;
    double margin = 1e300;
    for (std::size_t k = from; k < benign.cumulative_mean.size(); ++k) {
      margin = std::min(margin, white.cumulative_mean[k] - benign.cumulative_mean[k]);
    }
    return Outcome{margin > 0.0, fmt("min attacked - benign cumulative retrains over requests 100..400 = %.2f "
                                     "(final %.1f vs %.1f)",
                                     margin, white.cumulative_mean.back(), benign.cumulative_mean.back())};
  });

  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASSED" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
