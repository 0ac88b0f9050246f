#include "unlearn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "unlearn/seeding.hpp"

namespace unlearn {
namespace {

// Stream tags for per-trial seeds.
enum SeedTag : std::uint64_t { kData = 1, kSubsample, kSplit, kLearn, kEraseOrder, kUnlearn };

struct LoadedData {
  RawDataset pool;
  std::optional<RawDataset> test;
  int num_classes = 2;
};

RawDataset shift_labels(RawDataset raw, int offset) {
  raw.labels.array() += offset;
  return raw;
}

int count_classes(const RawDataset& raw) {
  if (raw.size() == 0) throw std::invalid_argument("dataset is empty");
  if (raw.labels.minCoeff() < 0) throw std::invalid_argument("class ids must be non-negative");
  return raw.labels.maxCoeff() + 1;
}

LoadedData load_data(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.data_dir);
  LoadedData out;
  switch (cfg.dataset) {
    case DatasetKind::synthetic: {
      const auto& s = cfg.synthetic;
      RawDataset raw = synth_gaussian(s.n, s.d, s.n_classes, s.separation, derive_seed(trial_seed, {kData}), s.noise);
      out.num_classes = s.n_classes;
      out.pool = s.n_classes == 2 ? binarize(raw, 0, 1) : std::move(raw);
      break;
    }
    case DatasetKind::mnist:
    case DatasetKind::fashion:
    case DatasetKind::binary_mnist: {
      RawDataset train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
      RawDataset test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
      if (cfg.dataset == DatasetKind::binary_mnist) {
        out.pool = binarize(train, cfg.class_a, cfg.class_b);
        out.test = binarize(test, cfg.class_a, cfg.class_b);
        out.num_classes = 2;
      } else {
        out.num_classes = std::max(count_classes(train), count_classes(test));
        out.pool = std::move(train);
        out.test = std::move(test);
      }
      break;
    }
    case DatasetKind::har: {
      // UCI HAR layout; activity ids start at 1.
      out.pool = shift_labels(load_delimited(dir / "train" / "X_train.txt", dir / "train" / "y_train.txt"), -1);
      out.test = shift_labels(load_delimited(dir / "test" / "X_test.txt", dir / "test" / "y_test.txt"), -1);
      out.num_classes = std::max(count_classes(out.pool), count_classes(*out.test));
      break;
    }
  }
  return out;
}

RawDataset raw_subset(const RawDataset& raw, const std::vector<Index>& rows) {
  RawDataset out;
  out.lo = raw.lo;
  out.hi = raw.hi;
  out.features.resize(static_cast<Index>(rows.size()), raw.dim());
  out.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = raw.features.row(rows[i]);
    out.labels(static_cast<Index>(i)) = raw.labels(rows[i]);
  }
  return out;
}

Labels head_labels(const Labels& labels, int num_classes, int head) {
  if (num_classes == 2) return labels;
  return (labels.array() == head).select(Labels::Ones(labels.size()), -Labels::Ones(labels.size()));
}

std::unique_ptr<AttackObjective> make_objective(const Dataset& attacker_data, const Labels& poison_labels,
                                                int num_classes, const ExperimentConfig& cfg) {
  if (num_classes == 2) {
    return std::make_unique<PoisonObjective>(attacker_data, poison_labels, cfg.budget.lambda, cfg.cost);
  }
  std::vector<std::unique_ptr<AttackObjective>> parts;
  for (int k = 0; k < num_classes; ++k) {
    parts.push_back(std::make_unique<PoisonObjective>(one_vs_rest(attacker_data, k),
                                                      head_labels(poison_labels, num_classes, k),
                                                      cfg.budget.lambda, cfg.cost));
  }
  return std::make_unique<SummedObjective>(std::move(parts));
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

double ExperimentConfig::radius_for(Index d) const {
  if (radius) return *radius;
  return norm == NormKind::l1 ? static_cast<double>(d) / 20.0 : 0.1;
}

void ExperimentConfig::validate() const {
  budget.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
  if (trials < 1) throw std::invalid_argument("config: trials must be at least 1");
  if (m_poison < 0 || n_pgd < 0) throw std::invalid_argument("config: poisons and n_pgd must be non-negative");
  if (radius && *radius < 0.0) throw std::invalid_argument("config: radius must be non-negative");
  if (requests() < 1) throw std::invalid_argument("config: need at least one erasure request");
  if (mode == AttackMode::grey_box && !(surrogate_fraction > 0.0)) {
    throw std::invalid_argument("config: grey-box mode needs surrogate_fraction > 0");
  }
}

RetrainInterval retrain_interval(const RequestLog& log) {
  if (log.records.empty()) throw std::invalid_argument("retrain_interval: empty log");
  RetrainInterval out;
  int approx = 0;
  int retrains = 0;
  std::optional<int> first;
  for (const auto& r : log.records) {
    if (r.outcome == UpdateKind::retrained) {
      if (!first) first = approx;
      ++retrains;
    } else {
      ++approx;
    }
  }
  const double total = static_cast<double>(log.records.size());
  out.censored = !first.has_value();
  out.first = first ? static_cast<double>(*first) : total;
  out.mean_gap = retrains > 0 ? static_cast<double>(approx) / retrains : total;
  return out;
}

std::vector<int> TrialResult::cumulative_retrains() const {
  std::vector<int> out;
  out.reserve(log.records.size());
  int count = 0;
  for (const auto& r : log.records) {
    if (r.outcome == UpdateKind::retrained) ++count;
    out.push_back(count);
  }
  return out;
}

double accuracy(const CertifiedClassifier& model, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("accuracy: empty test set");
  const Labels pred = predict(model, test.features);
  return static_cast<double>((pred.array() == test.labels.array()).count()) / static_cast<double>(test.size());
}

double accuracy(const ModelState& state, const Dataset& test) {
  CertifiedClassifier model;
  model.heads.push_back(state);
  return accuracy(model, test);
}

TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed) {
  cfg.validate();
  TrialResult result;
  result.trial_seed = trial_seed;
  result.mode = cfg.mode;

  LoadedData loaded = load_data(cfg, trial_seed);
  RawDataset pool = std::move(loaded.pool);
  if (cfg.max_train > 0 && pool.size() > cfg.max_train) {
    std::vector<Index> rows(static_cast<std::size_t>(pool.size()));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::mt19937_64 rng(derive_seed(trial_seed, {kSubsample}));
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(cfg.max_train));
    std::sort(rows.begin(), rows.end());
    pool = raw_subset(pool, rows);
  }
  const int num_classes = loaded.num_classes;

  const bool carve_surrogate = cfg.surrogate_fraction > 0.0;
  const double test_fraction = loaded.test ? 0.0 : cfg.test_fraction;
  const SplitSpec split = make_split(pool.size(), test_fraction, cfg.m_poison, carve_surrogate,
                                     cfg.surrogate_fraction, derive_seed(trial_seed, {kSplit}));

  const Dataset pool_n = normalize(pool);
  const double scale = pool_n.scale;
  Dataset train = pool_n.subset(split.train_indices);
  const Dataset test = loaded.test ? [&] {
    RawDataset t = *loaded.test;
    t.lo = pool.lo, t.hi = pool.hi;
    return normalize(t);
  }()
                                   : pool_n.subset(split.test_indices);

  // Poison rows as positions inside `train`, in request order.
  std::vector<Index> poison_rows;
  poison_rows.reserve(split.poison_indices.size());
  for (Index id : split.poison_indices) {
    const auto it = std::lower_bound(split.train_indices.begin(), split.train_indices.end(), id);
    poison_rows.push_back(static_cast<Index>(it - split.train_indices.begin()));
  }
  const Index m = static_cast<Index>(poison_rows.size());
  const Index d = train.dim();

  const double radius = cfg.radius_for(d);
  const bool craft = cfg.mode != AttackMode::benign && m > 0 && radius > 0.0 && cfg.n_pgd > 0;
  if (craft) {
    const auto start = std::chrono::steady_clock::now();
    PoisonBatch batch;
    batch.features.resize(m, d);
    batch.labels.resize(m);
    for (Index i = 0; i < m; ++i) {
      batch.features.row(i) = train.features.row(poison_rows[static_cast<std::size_t>(i)]);
      batch.labels(i) = train.labels(poison_rows[static_cast<std::size_t>(i)]);
    }
    batch.reference = batch.features;

    AttackConfig attack;
    attack.cost = cfg.cost;
    attack.n_pgd = cfg.n_pgd;
    // Validity box and perturbation ball, converted to normalized units.
    attack.constraints.push_back(NormBallConstraint{
        NormKind::linf, Matrix::Constant(m, d, 0.5 * (pool.lo + pool.hi) / scale), 0.5 * (pool.hi - pool.lo) / scale});
    attack.constraints.push_back(NormBallConstraint{cfg.norm, batch.reference, radius / scale});

    const Dataset attacker_data =
        cfg.mode == AttackMode::grey_box ? pool_n.subset(split.surrogate_indices) : train.without(poison_rows);
    auto objective = make_objective(attacker_data, batch.labels, num_classes, cfg);
    PgdReport report;
    const PoisonBatch crafted = pgd_craft(batch, attack, *objective, &report);
    result.cost_reference = -report.objective_trace.front();
    result.cost_crafted = -report.objective_trace.back();
    for (Index i = 0; i < m; ++i) train.features.row(poison_rows[static_cast<std::size_t>(i)]) = crafted.features.row(i);
    result.attack_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  // Request order, as ids of rows of the initial training set.
  std::vector<Index> clean_rows;
  {
    std::vector<char> is_poison(static_cast<std::size_t>(train.size()), 0);
    for (Index r : poison_rows) is_poison[static_cast<std::size_t>(r)] = 1;
    for (Index r = 0; r < train.size(); ++r) {
      if (!is_poison[static_cast<std::size_t>(r)]) clean_rows.push_back(r);
    }
    std::mt19937_64 rng(derive_seed(trial_seed, {kEraseOrder}));
    std::shuffle(clean_rows.begin(), clean_rows.end(), rng);
  }
  std::vector<Index> order;
  if (cfg.erase_order == EraseOrder::poison_first) order = poison_rows;
  order.insert(order.end(), clean_rows.begin(), clean_rows.end());
  const Index n_requests = cfg.requests();
  if (n_requests >= train.size() || n_requests > static_cast<Index>(order.size())) {
    throw std::invalid_argument("run_trial: more erasure requests than removable rows");
  }
  order.resize(static_cast<std::size_t>(n_requests));
  std::vector<char> poisoned(static_cast<std::size_t>(train.size()), 0);
  for (Index r : poison_rows) poisoned[static_cast<std::size_t>(r)] = 1;

  DefenderOptions defender;
  defender.loss.gamma = cfg.gamma;
  CertifiedClassifier model = learn_classifier(train, num_classes, cfg.budget, derive_seed(trial_seed, {kLearn}), defender);
  result.log.accuracy_initial = accuracy(model, test);

  // ids[i] is the initial-row id of the current row i.
  std::vector<Index> ids(static_cast<std::size_t>(train.size()));
  std::iota(ids.begin(), ids.end(), Index{0});
  Dataset current = std::move(train);
  for (Index k = 0; k < n_requests; ++k) {
    const Index id = order[static_cast<std::size_t>(k)];
    const auto pos_it = std::find(ids.begin(), ids.end(), id);
    const Index pos = static_cast<Index>(pos_it - ids.begin());
    const Index rows[] = {pos};
    auto step = unlearn_classifier(model, current, rows, cfg.budget,
                                   derive_seed(trial_seed, {kUnlearn, static_cast<std::uint64_t>(k)}), defender);
    RequestRecord rec;
    rec.request = k;
    rec.erased_row = id;
    rec.poisoned = poisoned[static_cast<std::size_t>(id)] != 0;
    rec.outcome = step.outcome.kind;
    rec.beta_before = step.outcome.beta_before;
    rec.beta_after = step.outcome.beta_after;
    rec.wall_time_seconds = step.outcome.wall_time_seconds;
    result.log.records.push_back(rec);
    model = std::move(step.model);
    current = std::move(step.remaining);
    ids.erase(pos_it);
  }
  result.log.accuracy_final = accuracy(model, test);
  result.accuracy_initial = result.log.accuracy_initial;
  result.accuracy_final = result.log.accuracy_final;
  result.retrain_count = model.retrain_count();
  result.interval = retrain_interval(result.log);
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.trials.resize(static_cast<std::size_t>(cfg.trials));

  const unsigned workers = cfg.parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  for (int begin = 0; begin < cfg.trials; begin += static_cast<int>(workers)) {
    const int end = std::min(cfg.trials, begin + static_cast<int>(workers));
    if (workers == 1) {
      report.trials[static_cast<std::size_t>(begin)] = run_trial(cfg, cfg.base_seed + static_cast<std::uint64_t>(begin));
      continue;
    }
    std::vector<std::future<TrialResult>> jobs;
    for (int i = begin; i < end; ++i) {
      jobs.push_back(std::async(std::launch::async, run_trial, std::cref(cfg), cfg.base_seed + static_cast<std::uint64_t>(i)));
    }
    for (int i = begin; i < end; ++i) report.trials[static_cast<std::size_t>(i)] = jobs[static_cast<std::size_t>(i - begin)].get();
  }

  std::vector<double> first, gap, count, acc0, acc1;
  for (const auto& t : report.trials) {
    first.push_back(t.interval.first);
    gap.push_back(t.interval.mean_gap);
    count.push_back(t.retrain_count);
    acc0.push_back(t.accuracy_initial);
    acc1.push_back(t.accuracy_final);
    report.censored_trials += t.interval.censored ? 1 : 0;
  }
  report.interval_first = summarize(first);
  report.interval_mean_gap = summarize(gap);
  report.retrain_count = summarize(count);
  report.accuracy_initial = summarize(acc0);
  report.accuracy_final = summarize(acc1);

  const std::size_t n_req = static_cast<std::size_t>(cfg.requests());
  report.cumulative_mean.assign(n_req, 0.0);
  for (const auto& t : report.trials) {
    const auto c = t.cumulative_retrains();
    for (std::size_t k = 0; k < n_req && k < c.size(); ++k) report.cumulative_mean[k] += c[k];
  }
  for (double& v : report.cumulative_mean) v /= static_cast<double>(report.trials.size());

  if (!cfg.output_path.empty()) {
    const std::filesystem::path out(cfg.output_path);
    std::filesystem::create_directories(out);
    write_trials_csv((out / "trials.csv").string(), report);
    write_cumulative_csv((out / "cumulative.csv").string(), report);
    write_summary_json((out / "summary.json").string(), cfg, report);
  }
  return report;
}

double reduction_percent(double benign, double attack) {
  if (benign == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (benign - attack) / benign;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<std::string>& values) {
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    ExperimentConfig cfg = config;
    cfg.output_path.clear();
    switch (axis) {
      case SweepAxis::sigma: cfg.budget.sigma = std::stod(value); break;
      case SweepAxis::lambda: cfg.budget.lambda = std::stod(value); break;
      case SweepAxis::radius: cfg.radius = std::stod(value); break;
      case SweepAxis::norm_p: cfg.norm = parse_norm(value); break;
      case SweepAxis::cost_fn: cfg.cost.kind = parse_cost(value); break;
      case SweepAxis::dataset: cfg.dataset = parse_dataset(value); break;
    }
    ExperimentConfig benign = cfg;
    benign.mode = AttackMode::benign;
    ExperimentConfig attacked = cfg;
    if (attacked.mode == AttackMode::benign) attacked.mode = AttackMode::white_box;

    const ExperimentReport b = run_experiment(benign);
    const ExperimentReport a = run_experiment(attacked);
    SweepRow row;
    row.value = value;
    row.benign_interval = b.interval_first.mean;
    row.attack_interval = a.interval_first.mean;
    row.reduction_percent = reduction_percent(row.benign_interval, row.attack_interval);
    row.benign_accuracy = b.accuracy_initial.mean;
    row.attack_accuracy = a.accuracy_initial.mean;
    row.benign_mean_gap = b.interval_mean_gap.mean;
    row.attack_mean_gap = a.interval_mean_gap.mean;
    rows.push_back(row);
  }
  if (!config.output_path.empty()) {
    std::filesystem::create_directories(config.output_path);
    write_sweep_csv((std::filesystem::path(config.output_path) / "sweep.csv").string(), rows);
  }
  return rows;
}

DatasetKind parse_dataset(std::string_view s) {
  const std::string v = lower(s);
  if (v == "mnist") return DatasetKind::mnist;
  if (v == "fashion" || v == "fashion-mnist") return DatasetKind::fashion;
  if (v == "binary-mnist" || v == "binary_mnist") return DatasetKind::binary_mnist;
  if (v == "har") return DatasetKind::har;
  if (v == "synthetic") return DatasetKind::synthetic;
  throw std::invalid_argument("unknown dataset '" + v + "'");
}

AttackMode parse_mode(std::string_view s) {
  const std::string v = lower(s);
  if (v == "benign") return AttackMode::benign;
  if (v == "white" || v == "white_box" || v == "white-box") return AttackMode::white_box;
  if (v == "grey" || v == "grey_box" || v == "grey-box" || v == "gray") return AttackMode::grey_box;
  throw std::invalid_argument("unknown mode '" + v + "'");
}

CostKind parse_cost(std::string_view s) {
  const std::string v = lower(s);
  if (v == "grnb") return CostKind::grnb;
  if (v == "influence" || v == "influence_norm") return CostKind::influence_norm;
  if (v == "gradient" || v == "gradient_norm") return CostKind::gradient_norm;
  throw std::invalid_argument("unknown cost function '" + v + "'");
}

NormKind parse_norm(std::string_view s) {
  const std::string v = lower(s);
  if (v == "l1" || v == "1") return NormKind::l1;
  if (v == "linf" || v == "inf") return NormKind::linf;
  throw std::invalid_argument("unknown norm '" + v + "'");
}

SweepAxis parse_axis(std::string_view s) {
  const std::string v = lower(s);
  if (v == "sigma") return SweepAxis::sigma;
  if (v == "lambda") return SweepAxis::lambda;
  if (v == "radius") return SweepAxis::radius;
  if (v == "norm_p" || v == "norm") return SweepAxis::norm_p;
  if (v == "cost_fn" || v == "cost") return SweepAxis::cost_fn;
  if (v == "dataset") return SweepAxis::dataset;
  throw std::invalid_argument("unknown sweep axis '" + v + "'");
}

EraseOrder parse_erase_order(std::string_view s) {
  const std::string v = lower(s);
  if (v == "poison_first") return EraseOrder::poison_first;
  if (v == "random_clean") return EraseOrder::random_clean;
  throw std::invalid_argument("unknown erase order '" + v + "'");
}

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::mnist: return "mnist";
    case DatasetKind::fashion: return "fashion";
    case DatasetKind::binary_mnist: return "binary-mnist";
    case DatasetKind::har: return "har";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "?";
}

std::string to_string(AttackMode m) {
  switch (m) {
    case AttackMode::benign: return "benign";
    case AttackMode::white_box: return "white";
    case AttackMode::grey_box: return "grey";
  }
  return "?";
}

std::string to_string(CostKind k) {
  switch (k) {
    case CostKind::grnb: return "grnb";
    case CostKind::influence_norm: return "influence";
    case CostKind::gradient_norm: return "gradient";
  }
  return "?";
}

std::string to_string(NormKind k) { return k == NormKind::l1 ? "l1" : "linf"; }

ExperimentConfig config_from_json(const std::string& json_text, ExperimentConfig base) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  ExperimentConfig c = std::move(base);
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("dataset")) c.dataset = parse_dataset(j.at("dataset").get<std::string>());
  get("data_dir", c.data_dir);
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    if (s.contains("n")) c.synthetic.n = s.at("n").get<Index>();
    if (s.contains("d")) c.synthetic.d = s.at("d").get<Index>();
    if (s.contains("n_classes")) c.synthetic.n_classes = s.at("n_classes").get<int>();
    if (s.contains("separation")) c.synthetic.separation = s.at("separation").get<double>();
    if (s.contains("noise")) c.synthetic.noise = s.at("noise").get<double>();
  }
  get("max_train", c.max_train);
  get("class_a", c.class_a);
  get("class_b", c.class_b);
  get("test_fraction", c.test_fraction);
  get("surrogate_fraction", c.surrogate_fraction);
  get("epsilon", c.budget.epsilon);
  get("delta", c.budget.delta);
  get("sigma", c.budget.sigma);
  get("lambda", c.budget.lambda);
  get("gamma", c.gamma);
  if (j.contains("cost")) c.cost.kind = parse_cost(j.at("cost").get<std::string>());
  get("ignore_model_dep", c.cost.ignore_model_dependence);
  if (j.contains("norm")) c.norm = parse_norm(j.at("norm").get<std::string>());
  if (j.contains("radius")) c.radius = j.at("radius").get<double>();
  get("n_pgd", c.n_pgd);
  get("poisons", c.m_poison);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("erase_order")) c.erase_order = parse_erase_order(j.at("erase_order").get<std::string>());
  if (j.contains("n_requests")) c.n_requests = j.at("n_requests").get<Index>();
  get("trials", c.trials);
  get("seed", c.base_seed);
  get("out", c.output_path);
  get("parallel", c.parallel);
  return c;
}

void write_trials_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "trial_seed,mode,retrain_interval_first,retrain_interval_meangap,censored,retrain_count,n_requests,"
         "acc_initial,acc_final\n";
  for (const auto& t : report.trials) {
    out << t.trial_seed << ',' << to_string(t.mode) << ',' << fmt6(t.interval.first) << ','
        << fmt6(t.interval.mean_gap) << ',' << (t.interval.censored ? "true" : "false") << ',' << t.retrain_count
        << ',' << t.log.records.size() << ',' << fmt6(t.accuracy_initial) << ',' << fmt6(t.accuracy_final) << '\n';
  }
}

void write_cumulative_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "requests_processed,mean_retrains";
  for (const auto& t : report.trials) out << ",trial_" << t.trial_seed;
  out << '\n';
  std::vector<std::vector<int>> series;
  for (const auto& t : report.trials) series.push_back(t.cumulative_retrains());
  for (std::size_t k = 0; k < report.cumulative_mean.size(); ++k) {
    out << (k + 1) << ',' << fmt6(report.cumulative_mean[k]);
    for (const auto& s : series) out << ',' << (k < s.size() ? s[k] : 0);
    out << '\n';
  }
}

void write_summary_json(const std::string& path, const ExperimentConfig& config, const ExperimentReport& report) {
  auto summary = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}}; };
  nlohmann::json j;
  j["config"] = {
      {"dataset", to_string(config.dataset)},
      {"mode", to_string(config.mode)},
      {"epsilon", config.budget.epsilon},
      {"delta", config.budget.delta},
      {"sigma", config.budget.sigma},
      {"lambda", config.budget.lambda},
      {"gamma", config.gamma},
      {"cost", to_string(config.cost.kind)},
      {"ignore_model_dep", config.cost.ignore_model_dependence},
      {"norm", to_string(config.norm)},
      {"radius", config.radius ? nlohmann::json(*config.radius) : nlohmann::json(nullptr)},
      {"n_pgd", config.n_pgd},
      {"poisons", config.m_poison},
      {"n_requests", config.requests()},
      {"trials", config.trials},
      {"seed", config.base_seed},
  };
  j["retrain_interval_first"] = summary(report.interval_first);
  j["retrain_interval_meangap"] = summary(report.interval_mean_gap);
  j["retrain_count"] = summary(report.retrain_count);
  j["acc_initial"] = summary(report.accuracy_initial);
  j["acc_final"] = summary(report.accuracy_final);
  j["censored_trials"] = report.censored_trials;
  j["trials"] = static_cast<int>(report.trials.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "value,acc_benign,acc_attack,interval_benign,interval_attack,reduction_percent,meangap_benign,"
         "meangap_attack\n";
  for (const auto& r : rows) {
    out << r.value << ',' << fmt6(r.benign_accuracy) << ',' << fmt6(r.attack_accuracy) << ','
        << fmt6(r.benign_interval) << ',' << fmt6(r.attack_interval) << ',' << fmt6(r.reduction_percent) << ','
        << fmt6(r.benign_mean_gap) << ',' << fmt6(r.attack_mean_gap) << '\n';
  }
}

}  // namespace unlearn
