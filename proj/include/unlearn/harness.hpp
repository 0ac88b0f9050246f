#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unlearn/attack.hpp"
#include "unlearn/certified_removal.hpp"
#include "unlearn/data.hpp"

namespace unlearn {

enum class DatasetKind { mnist, fashion, binary_mnist, har, synthetic };
enum class AttackMode { benign, white_box, grey_box };
enum class EraseOrder { poison_first, random_clean };

struct SyntheticParams {
  Index n = 2000;
  Index d = 50;
  int n_classes = 2;
  double separation = 2.0;
  double noise = 1.0;
};

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::synthetic;
  std::string data_dir;
  SyntheticParams synthetic;
  /// Random subsample of the training pool (0 keeps everything).
  Index max_train = 0;
  int class_a = 3;
  int class_b = 8;
  /// Held-out share for datasets without a predefined test split.
  double test_fraction = 0.2;
  /// Share of the pool kept away from the defender as attacker surrogate data.
  double surrogate_fraction = 0.0;

  RemovalBudget budget;
  double gamma = kLogisticGamma;

  CostFunction cost;
  NormKind norm = NormKind::l1;
  /// Perturbation radius in raw feature units; defaults to d/20 (l1) or 0.1 (linf).
  std::optional<double> radius;
  int n_pgd = 10;

  Index m_poison = 100;
  AttackMode mode = AttackMode::white_box;
  EraseOrder erase_order = EraseOrder::poison_first;
  /// Defaults to m_poison.
  std::optional<Index> n_requests;
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::string output_path;
  /// Run trials on worker threads.
  bool parallel = true;

  Index requests() const { return n_requests.value_or(m_poison); }
  double radius_for(Index d) const;
  void validate() const;
};

struct RequestRecord {
  Index request = 0;
  Index erased_row = 0;  // row id in the defender's initial training set
  bool poisoned = false;
  UpdateKind outcome = UpdateKind::approximate;
  double beta_before = 0.0;
  double beta_after = 0.0;
  double wall_time_seconds = 0.0;
};

struct RequestLog {
  std::vector<RequestRecord> records;
  double accuracy_initial = 0.0;
  double accuracy_final = 0.0;
};

struct RetrainInterval {
  /// Approximate updates before the first retrain (all requests when none).
  double first = 0.0;
  /// #approximate / #retrained (all requests when none).
  double mean_gap = 0.0;
  bool censored = false;
};

/// Throws std::invalid_argument on an empty log.
RetrainInterval retrain_interval(const RequestLog& log);

struct TrialResult {
  std::uint64_t trial_seed = 0;
  AttackMode mode = AttackMode::benign;
  RetrainInterval interval;
  int retrain_count = 0;
  double accuracy_initial = 0.0;
  double accuracy_final = 0.0;
  double attack_seconds = 0.0;
  /// Attacker cost (the configured cost function) before and after crafting.
  double cost_reference = 0.0;
  double cost_crafted = 0.0;
  RequestLog log;

  /// Retrains triggered after each request.
  std::vector<int> cumulative_retrains() const;
};

/// Fraction of correctly classified test rows. Throws on an empty test set.
double accuracy(const CertifiedClassifier& model, const Dataset& test);
/// Binary model: sign of theta^T x with ties broken toward +1.
double accuracy(const ModelState& state, const Dataset& test);

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t trial_seed);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ExperimentReport {
  std::vector<TrialResult> trials;
  Summary interval_first;
  Summary interval_mean_gap;
  Summary retrain_count;
  Summary accuracy_initial;
  Summary accuracy_final;
  int censored_trials = 0;
  /// Mean cumulative retrain count after each request.
  std::vector<double> cumulative_mean;
};

/// Runs trials with seeds base_seed .. base_seed + trials - 1 and aggregates
/// them in trial order. Writes trials.csv, summary.json and cumulative.csv
/// into config.output_path when it is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class SweepAxis { sigma, lambda, radius, norm_p, cost_fn, dataset };

struct SweepRow {
  std::string value;
  double benign_interval = 0.0;
  double attack_interval = 0.0;
  double reduction_percent = 0.0;  // NaN when the benign interval is 0
  double benign_accuracy = 0.0;
  double attack_accuracy = 0.0;
  double benign_mean_gap = 0.0;
  double attack_mean_gap = 0.0;
};

/// 100 (benign - attack) / benign; NaN when benign is 0.
double reduction_percent(double benign, double attack);

/// Benign and attacked experiments per value of one configuration axis.
/// Writes sweep.csv into config.output_path when it is set.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& values);

// Text forms used by the CLI, config files and CSV output.
DatasetKind parse_dataset(std::string_view s);
AttackMode parse_mode(std::string_view s);
CostKind parse_cost(std::string_view s);
NormKind parse_norm(std::string_view s);
SweepAxis parse_axis(std::string_view s);
EraseOrder parse_erase_order(std::string_view s);
std::string to_string(DatasetKind k);
std::string to_string(AttackMode m);
std::string to_string(CostKind k);
std::string to_string(NormKind k);

/// Overlays the keys present in a JSON object onto `base`.
ExperimentConfig config_from_json(const std::string& json_text, ExperimentConfig base = {});

void write_trials_csv(const std::string& path, const ExperimentReport& report);
void write_cumulative_csv(const std::string& path, const ExperimentReport& report);
void write_summary_json(const std::string& path, const ExperimentConfig& config, const ExperimentReport& report);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace unlearn
