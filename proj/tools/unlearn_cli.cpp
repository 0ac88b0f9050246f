// Command-line driver for certified-removal experiments.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "unlearn/harness.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> dataset, data_dir, mode, cost, norm, out, erase_order;
  std::optional<double> sigma, lambda, epsilon, delta, radius, gamma;
  std::optional<long long> poisons, requests, max_train;
  std::optional<int> n_pgd, trials;
  std::optional<std::uint64_t> seed;
  bool ignore_model_dep = false;
  bool model_dep = false;
  bool serial = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; command-line flags override it");
  cmd->add_option("--dataset", f.dataset, "mnist | fashion | binary-mnist | har | synthetic");
  cmd->add_option("--data-dir", f.data_dir, "directory holding the dataset files");
  cmd->add_option("--max-train", f.max_train, "subsample the training pool to this many rows");
  cmd->add_option("--sigma", f.sigma, "std of the objective perturbation");
  cmd->add_option("--lambda", f.lambda, "L2 regularization strength");
  cmd->add_option("--epsilon", f.epsilon, "certified removal epsilon");
  cmd->add_option("--delta", f.delta, "certified removal delta");
  cmd->add_option("--gamma", f.gamma, "third-derivative Lipschitz constant of the loss");
  cmd->add_option("--poisons", f.poisons, "number of poisoned training rows");
  cmd->add_option("--requests", f.requests, "number of erasure requests (default: --poisons)");
  cmd->add_option("--erase-order", f.erase_order, "poison_first | random_clean");
  cmd->add_option("--mode", f.mode, "benign | white | grey");
  cmd->add_option("--cost", f.cost, "grnb | influence | gradient");
  cmd->add_flag("--ignore-model-dep", f.ignore_model_dep, "treat the model as fixed while crafting");
  cmd->add_flag("--model-dep", f.model_dep, "differentiate through the model refit while crafting");
  cmd->add_option("--norm", f.norm, "l1 | linf perturbation ball");
  cmd->add_option("--radius", f.radius, "perturbation radius in raw feature units");
  cmd->add_option("--n-pgd", f.n_pgd, "projected gradient iterations");
  cmd->add_option("--trials", f.trials, "number of trials");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--serial", f.serial, "run trials on the calling thread");
}

unlearn::ExperimentConfig build_config(const Flags& f) {
  using namespace unlearn;
  ExperimentConfig c;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw std::runtime_error("cannot read " + f.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    c = config_from_json(ss.str(), c);
  }
  if (f.dataset) c.dataset = parse_dataset(*f.dataset);
  if (f.data_dir) c.data_dir = *f.data_dir;
  if (f.max_train) c.max_train = *f.max_train;
  if (f.sigma) c.budget.sigma = *f.sigma;
  if (f.lambda) c.budget.lambda = *f.lambda;
  if (f.epsilon) c.budget.epsilon = *f.epsilon;
  if (f.delta) c.budget.delta = *f.delta;
  if (f.gamma) c.gamma = *f.gamma;
  if (f.poisons) c.m_poison = *f.poisons;
  if (f.requests) c.n_requests = *f.requests;
  if (f.erase_order) c.erase_order = parse_erase_order(*f.erase_order);
  if (f.mode) c.mode = parse_mode(*f.mode);
  if (f.cost) c.cost.kind = parse_cost(*f.cost);
  if (f.ignore_model_dep) c.cost.ignore_model_dependence = true;
  if (f.model_dep) c.cost.ignore_model_dependence = false;
  if (f.norm) c.norm = parse_norm(*f.norm);
  if (f.radius) c.radius = *f.radius;
  if (f.n_pgd) c.n_pgd = *f.n_pgd;
  if (f.trials) c.trials = *f.trials;
  if (f.seed) c.base_seed = *f.seed;
  if (f.out) c.output_path = *f.out;
  if (f.serial) c.parallel = false;
  c.validate();
  return c;
}

void print_report(const unlearn::ExperimentConfig& c, const unlearn::ExperimentReport& r) {
  std::printf("dataset=%s mode=%s cost=%s norm=%s trials=%zu\n", unlearn::to_string(c.dataset).c_str(),
              unlearn::to_string(c.mode).c_str(), unlearn::to_string(c.cost.kind).c_str(),
              unlearn::to_string(c.norm).c_str(), r.trials.size());
  std::printf("retrain interval (first): %.3f +- %.3f  [%d censored]\n", r.interval_first.mean,
              r.interval_first.stddev, r.censored_trials);
  std::printf("retrain interval (mean gap): %.3f +- %.3f\n", r.interval_mean_gap.mean, r.interval_mean_gap.stddev);
  std::printf("retrains: %.3f +- %.3f\n", r.retrain_count.mean, r.retrain_count.stddev);
  std::printf("accuracy: initial %.4f, final %.4f\n", r.accuracy_initial.mean, r.accuracy_final.mean);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified data removal experiments under poisoning"};
  app.require_subcommand(1);

  Flags run_flags;
  CLI::App* run = app.add_subcommand("run", "run benign or attacked trials");
  add_common(run, run_flags);

  Flags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  CLI::App* sw = app.add_subcommand("sweep", "compare benign and attacked runs across one parameter");
  add_common(sw, sweep_flags);
  sw->add_option("--axis", axis, "sigma | lambda | radius | norm | cost | dataset")->required();
  sw->add_option("--values", values, "values of the swept parameter")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = build_config(run_flags);
      print_report(config, unlearn::run_experiment(config));
    } else {
      const auto config = build_config(sweep_flags);
      const auto rows = unlearn::sweep(config, unlearn::parse_axis(axis), values);
      std::printf("%-12s %10s %10s %10s %8s %8s\n", "value", "benign", "attack", "reduce%", "acc_b", "acc_a");
      for (const auto& row : rows) {
        std::printf("%-12s %10.3f %10.3f %10.2f %8.4f %8.4f\n", row.value.c_str(), row.benign_interval,
                    row.attack_interval, row.reduction_percent, row.benign_accuracy, row.attack_accuracy);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
