#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "test_util.hpp"
#include "unlearn/harness.hpp"

using namespace unlearn;
namespace fs = std::filesystem;

namespace {

RequestLog log_of(const std::string& outcomes) {
  RequestLog log;
  for (char c : outcomes) {
    RequestRecord r;
    r.request = static_cast<Index>(log.records.size());
    r.outcome = c == 'r' ? UpdateKind::retrained : UpdateKind::approximate;
    log.records.push_back(r);
  }
  return log;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.synthetic.n = 300;
  c.synthetic.d = 10;
  c.m_poison = 10;
  c.n_requests = 30;
  c.parallel = false;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(RetrainInterval, CountsApproximateUpdatesBeforeFirstRetrain) {
  const auto r = retrain_interval(log_of("aaar"));
  EXPECT_EQ(r.first, 3.0);
  EXPECT_FALSE(r.censored);
  EXPECT_EQ(r.mean_gap, 3.0);
}

TEST(RetrainInterval, ImmediateRetrain) {
  const auto r = retrain_interval(log_of("raaar"));
  EXPECT_EQ(r.first, 0.0);
  EXPECT_EQ(r.mean_gap, 1.5);
}

TEST(RetrainInterval, CensoredWhenNoRetrain) {
  const auto r = retrain_interval(log_of("aaaaaaaaaa"));
  EXPECT_EQ(r.first, 10.0);
  EXPECT_TRUE(r.censored);
  EXPECT_EQ(r.mean_gap, 10.0);
}

TEST(RetrainInterval, EmptyLogThrows) { EXPECT_THROW(retrain_interval(RequestLog{}), std::invalid_argument); }

TEST(Accuracy, SeparableFixtureIsPerfect) {
  Dataset data;
  data.features = (Matrix(6, 2) << 0.5, 0.1, 0.6, 0.2, 0.4, -0.1, -0.5, 0.1, -0.6, 0.0, -0.4, -0.2).finished();
  data.labels = (Labels(6) << 1, 1, 1, -1, -1, -1).finished();
  RemovalBudget budget;
  budget.sigma = 1e-9;
  const ModelState s = learn(data, budget, 1);
  EXPECT_EQ(accuracy(s, data), 1.0);
}

TEST(Accuracy, ZeroWeightsPredictPositive) {
  Dataset data;
  data.features = Matrix::Ones(5, 2);
  data.labels = (Labels(5) << 1, -1, 1, -1, -1).finished();
  ModelState s;
  s.theta = Vector::Zero(2);
  s.b = Vector::Zero(2);
  EXPECT_DOUBLE_EQ(accuracy(s, data), 0.4);
}

TEST(Accuracy, RandomLabelsNearHalf) {
  std::mt19937_64 rng(3);
  const Dataset train = testutil::random_dataset(2000, 5, rng);
  const Dataset test = testutil::random_dataset(2000, 5, rng);
  RemovalBudget budget;
  budget.sigma = 1e-6;
  EXPECT_NEAR(accuracy(learn(train, budget, 1), test), 0.5, 0.1);
}

TEST(Accuracy, EmptyTestThrows) {
  ModelState s;
  s.theta = Vector::Zero(2);
  Dataset empty;
  empty.features.resize(0, 2);
  EXPECT_THROW(accuracy(s, empty), std::invalid_argument);
}

TEST(ReductionPercent, Examples) {
  EXPECT_EQ(reduction_percent(50.0, 50.0), 0.0);
  EXPECT_EQ(reduction_percent(131.7, 0.0), 100.0);
  EXPECT_NEAR(reduction_percent(131.7, 8.16), 93.80410022779043, 1e-9);
  EXPECT_TRUE(std::isnan(reduction_percent(0.0, 0.0)));
}

TEST(Sweep, EmptyValuesGiveEmptyTable) { EXPECT_TRUE(sweep(small_config(), SweepAxis::sigma, {}).empty()); }

TEST(Sweep, RowsCarryBothModes) {
  ExperimentConfig c = small_config();
  const auto rows = sweep(c, SweepAxis::radius, {"0", "0.5"});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].benign_interval, rows[0].attack_interval);
  EXPECT_EQ(rows[0].reduction_percent, 0.0);
  EXPECT_EQ(rows[1].benign_interval, rows[0].benign_interval);
}

TEST(RunTrial, HugeNoiseNeverRetrains) {
  ExperimentConfig c = small_config();
  c.mode = AttackMode::benign;
  c.budget.epsilon = 1e9;
  const TrialResult t = run_trial(c, 1);
  EXPECT_EQ(t.retrain_count, 0);
  EXPECT_TRUE(t.interval.censored);
  EXPECT_EQ(t.interval.first, 30.0);
  for (const auto& r : t.log.records) EXPECT_EQ(r.outcome, UpdateKind::approximate);
}

TEST(RunTrial, TinyNoiseRetrainsEveryRequest) {
  ExperimentConfig c = small_config();
  c.budget.sigma = 1e-9;
  const TrialResult t = run_trial(c, 2);
  EXPECT_EQ(t.interval.first, 0.0);
  EXPECT_EQ(t.retrain_count, 30);
  for (const auto& r : t.log.records) {
    EXPECT_EQ(r.outcome, UpdateKind::retrained);
    EXPECT_EQ(r.beta_after, 0.0);
  }
}

TEST(RunTrial, DeterministicAndConsistentLog) {
  const ExperimentConfig c = small_config();
  const TrialResult a = run_trial(c, 5);
  const TrialResult b = run_trial(c, 5);
  ASSERT_EQ(a.log.records.size(), 30u);
  EXPECT_EQ(a.interval.first, b.interval.first);
  EXPECT_EQ(a.accuracy_initial, b.accuracy_initial);
  EXPECT_EQ(a.cost_crafted, b.cost_crafted);
  int retrains = 0;
  for (std::size_t k = 0; k < a.log.records.size(); ++k) {
    const auto& r = a.log.records[k];
    EXPECT_EQ(r.beta_before, b.log.records[k].beta_before);
    EXPECT_EQ(r.beta_after, b.log.records[k].beta_after);
    EXPECT_EQ(r.request, static_cast<Index>(k));
    EXPECT_EQ(r.poisoned, k < 10);
    if (r.outcome == UpdateKind::retrained) {
      ++retrains;
      EXPECT_EQ(r.beta_after, 0.0);
    } else {
      EXPECT_GE(r.beta_after, r.beta_before);
    }
    if (k > 0) EXPECT_EQ(r.beta_before, a.log.records[k - 1].beta_after);
  }
  EXPECT_EQ(retrains, a.retrain_count);
  EXPECT_GE(a.interval.first, 0.0);
  EXPECT_GE(a.accuracy_initial, 0.0);
  EXPECT_LE(a.accuracy_initial, 1.0);
  EXPECT_GT(a.cost_crafted, a.cost_reference);
}

TEST(RunTrial, ErasedRowsAreDistinct) {
  const TrialResult t = run_trial(small_config(), 6);
  std::set<Index> seen;
  for (const auto& r : t.log.records) EXPECT_TRUE(seen.insert(r.erased_row).second);
}

TEST(RunTrial, BenignAndAttackShareEverythingButCrafting) {
  ExperimentConfig c = small_config();
  c.radius = 0.0;
  const TrialResult attacked = run_trial(c, 3);
  c.mode = AttackMode::benign;
  c.radius.reset();
  const TrialResult benign = run_trial(c, 3);
  EXPECT_EQ(attacked.accuracy_initial, benign.accuracy_initial);
  EXPECT_EQ(attacked.interval.first, benign.interval.first);
  for (std::size_t k = 0; k < benign.log.records.size(); ++k) {
    EXPECT_EQ(attacked.log.records[k].erased_row, benign.log.records[k].erased_row);
    EXPECT_EQ(attacked.log.records[k].beta_after, benign.log.records[k].beta_after);
  }
}

TEST(RunTrial, GreyBoxAndMulticlassRun) {
  ExperimentConfig c = small_config();
  c.mode = AttackMode::grey_box;
  c.surrogate_fraction = 0.2;
  const TrialResult grey = run_trial(c, 1);
  EXPECT_EQ(grey.log.records.size(), 30u);
  EXPECT_GT(grey.cost_crafted, grey.cost_reference);

  ExperimentConfig m = small_config();
  m.synthetic.n_classes = 3;
  m.synthetic.separation = 4.0;
  m.synthetic.noise = 0.5;
  const TrialResult multi = run_trial(m, 1);
  EXPECT_EQ(multi.log.records.size(), 30u);
  EXPECT_GT(multi.accuracy_initial, 0.5);
}

TEST(RunTrial, InfeasibleRequestsThrow) {
  ExperimentConfig c = small_config();
  c.n_requests = 10000;
  EXPECT_THROW(run_trial(c, 1), std::invalid_argument);
  c = small_config();
  c.mode = AttackMode::grey_box;
  EXPECT_THROW(run_trial(c, 1), std::invalid_argument);
}

TEST(RunExperiment, SingleTrialAggregateEqualsTrial) {
  ExperimentConfig c = small_config();
  c.base_seed = 11;
  const ExperimentReport r = run_experiment(c);
  const TrialResult t = run_trial(c, 11);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.interval_first.mean, t.interval.first);
  EXPECT_EQ(r.interval_first.stddev, 0.0);
  EXPECT_EQ(r.accuracy_initial.mean, t.accuracy_initial);
  EXPECT_EQ(r.retrain_count.mean, t.retrain_count);
}

TEST(RunExperiment, ParallelMatchesSerialInTrialOrder) {
  ExperimentConfig c = small_config();
  c.trials = 4;
  const ExperimentReport serial = run_experiment(c);
  c.parallel = true;
  const ExperimentReport parallel = run_experiment(c);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(serial.trials[i].trial_seed, static_cast<std::uint64_t>(i));
    EXPECT_EQ(serial.trials[i].interval.first, parallel.trials[i].interval.first);
    EXPECT_EQ(serial.trials[i].accuracy_final, parallel.trials[i].accuracy_final);
  }
  EXPECT_EQ(serial.interval_first.mean, parallel.interval_first.mean);
}

TEST(RunExperiment, CumulativeSeriesIsMeanOfTrials) {
  ExperimentConfig c = small_config();
  c.trials = 3;
  c.budget.sigma = 2.0;
  const ExperimentReport r = run_experiment(c);
  ASSERT_EQ(r.cumulative_mean.size(), 30u);
  for (std::size_t k = 0; k < 30; ++k) {
    double sum = 0;
    for (const auto& t : r.trials) sum += t.cumulative_retrains()[k];
    EXPECT_DOUBLE_EQ(r.cumulative_mean[k], sum / 3);
  }
  EXPECT_DOUBLE_EQ(r.cumulative_mean.back(), r.retrain_count.mean);
}

TEST(RunExperiment, WritesOutputs) {
  const fs::path dir = fs::temp_directory_path() / "unlearn_harness_outputs";
  fs::remove_all(dir);
  ExperimentConfig c = small_config();
  c.trials = 2;
  c.output_path = dir.string();
  run_experiment(c);
  const std::string trials = read_file(dir / "trials.csv");
  EXPECT_EQ(trials.substr(0, trials.find('\n')),
            "trial_seed,mode,retrain_interval_first,retrain_interval_meangap,censored,retrain_count,n_requests,"
            "acc_initial,acc_final");
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 3);
  const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
  EXPECT_EQ(summary["trials"], 2);
  EXPECT_TRUE(summary.contains("retrain_interval_first"));
  const std::string cumulative = read_file(dir / "cumulative.csv");
  EXPECT_EQ(std::count(cumulative.begin(), cumulative.end(), '\n'), 31);
  fs::remove_all(dir);
}

TEST(Config, JsonOverlayAndParsers) {
  const ExperimentConfig c = config_from_json(
      R"({"dataset": "har", "sigma": 1.0, "lambda": 0.01, "cost": "grnb", "norm": "linf", "radius": 0.2,
          "poisons": 50, "mode": "grey", "trials": 3, "seed": 9, "ignore_model_dep": false,
          "synthetic": {"d": 20}})");
  EXPECT_EQ(c.dataset, DatasetKind::har);
  EXPECT_EQ(c.budget.sigma, 1.0);
  EXPECT_EQ(c.budget.lambda, 0.01);
  EXPECT_EQ(c.budget.epsilon, 1.0);
  EXPECT_EQ(c.cost.kind, CostKind::grnb);
  EXPECT_FALSE(c.cost.ignore_model_dependence);
  EXPECT_EQ(c.norm, NormKind::linf);
  EXPECT_EQ(c.radius, 0.2);
  EXPECT_EQ(c.m_poison, 50);
  EXPECT_EQ(c.mode, AttackMode::grey_box);
  EXPECT_EQ(c.trials, 3);
  EXPECT_EQ(c.base_seed, 9u);
  EXPECT_EQ(c.synthetic.d, 20);
  EXPECT_EQ(c.synthetic.n, 2000);
  EXPECT_THROW(config_from_json(R"({"mode": "purple"})"), std::invalid_argument);
  EXPECT_THROW(config_from_json("[1, 2]"), std::invalid_argument);
  EXPECT_EQ(parse_dataset("binary-mnist"), DatasetKind::binary_mnist);
  EXPECT_EQ(parse_cost("influence"), CostKind::influence_norm);
  EXPECT_EQ(parse_axis("norm"), SweepAxis::norm_p);
}

TEST(Config, DefaultsFollowOrganizationAndAttackerSettings) {
  const ExperimentConfig c;
  EXPECT_EQ(c.budget.epsilon, 1.0);
  EXPECT_EQ(c.budget.delta, 1e-4);
  EXPECT_EQ(c.budget.sigma, 10.0);
  EXPECT_EQ(c.budget.lambda, 1e-3);
  EXPECT_EQ(c.n_pgd, 10);
  EXPECT_EQ(c.norm, NormKind::l1);
  EXPECT_EQ(c.radius_for(784), 39.2);
  EXPECT_EQ(c.cost.kind, CostKind::influence_norm);
  EXPECT_TRUE(c.cost.ignore_model_dependence);
}
