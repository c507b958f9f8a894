// Command-line driver: every subcommand reads a model or config file and
// writes CSV/JSON artifacts into --out (default: current directory).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "property_suite.hpp"
#include "treesel/treesel.hpp"

namespace fs = std::filesystem;
using namespace treesel;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitIo = 3;
constexpr int kExitSelftest = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Parse:
      return kExitIo;
    case ErrorKind::InitialDiverged:
    case ErrorKind::Diverged:
    case ErrorKind::MaxIterations:
    case ErrorKind::NotObservable:
    case ErrorKind::OrderingViolated:
    case ErrorKind::TooManyTrees:
      return kExitInfeasible;
    default:
      return kExitOther;
  }
}

std::string output_path(const std::string& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
  return (fs::path(dir) / name).string();
}

MarginalSchedule parse_schedule(const std::string& text, std::size_t m) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, "--p: cannot parse '" + cell + "'");
    }
  }
  if (values.size() != m)
    throw Error(ErrorKind::DimensionMismatch,
                "--p needs " + std::to_string(m) + " comma-separated values, got " + std::to_string(values.size()));
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

double resolve_budget(const ModelFile& model, const std::optional<double>& flag) {
  if (flag) return *flag;
  if (model.budget) return *model.budget;
  throw Error(ErrorKind::InvalidArgument, "no budget: pass --budget or set \"budget\" in the model file");
}

std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string schedule_text(const Vector& p) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) out += (i ? ", " : "") + format_double(p(i));
  return out + ")";
}

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

int cmd_optimize(const std::string& model_path, const std::optional<double>& budget_flag, const Common& c) {
  const ModelFile model = read_model(model_path);
  const double budget = resolve_budget(model, budget_flag);
  const GreedyTrace g = greedy_optimize(model.system, FeasibleSet(model.tree, budget));
  write_csv_file(output_path(c.out_dir, "greedy.csv"), [&](std::ostream& os) { write_greedy_csv(os, g); });
  nlohmann::json summary;
  summary["budget"] = budget;
  summary["p_star"] = to_vector(g.p_star);
  summary["trace_L_inf"] = g.L_inf.trace();
  summary["outer_iterations"] = g.iterates.size() - 1;
  summary["converged"] = g.converged;
  summary["limit_consistent"] = g.limit_consistent;
  write_text_file(output_path(c.out_dir, "summary.json"), summary.dump(2) + "\n");
  std::printf("p* = %s\ntrace L_inf = %.6f\n", schedule_text(g.p_star).c_str(), g.L_inf.trace());
  return 0;
}

int cmd_decompose(const std::string& model_path, const std::string& p_text, const Common& c) {
  const ModelFile model = read_model(model_path);
  const MarginalSchedule p = parse_schedule(p_text, model.tree.size());
  const TreeDistribution dist = decompose(model.tree, p);
  write_csv_file(output_path(c.out_dir, "distribution.csv"),
                 [&](std::ostream& os) { write_distribution_csv(os, dist); });
  std::printf("%zu trees in support, expected energy %s\n", dist.size(),
              format_double(expected_energy(model.tree, p)).c_str());
  return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& p_text, const std::optional<double>& budget_flag,
                 std::size_t rounds, std::size_t steps, const Common& c) {
  const ModelFile model = read_model(model_path);
  MarginalSchedule p;
  if (!p_text.empty()) {
    p = parse_schedule(p_text, model.tree.size());
  } else {
    const double budget = resolve_budget(model, budget_flag);
    p = greedy_optimize(model.system, FeasibleSet(model.tree, budget)).p_star;
  }
  const RunSummary run = simulate_run(model.tree, p, derive_seed(c.seed, 0), rounds, true);
  write_csv_file(output_path(c.out_dir, "rounds.csv"), [&](std::ostream& os) { write_round_log_csv(os, run.log); });
  const TreeDistribution dist = decompose(model.tree, p);
  const SamplePath path = sample_path(model.system, model.tree, dist, derive_seed(c.seed, 1), steps);
  write_csv_file(output_path(c.out_dir, "sample_path.csv"), [&](std::ostream& os) { write_sample_path_csv(os, path); });
  std::printf("schedule %s\nmean energy %s over %zu rounds (expected %s), %zu packets, %zu control messages\n",
              schedule_text(p).c_str(), format_double(run.mean_energy).c_str(), run.rounds,
              format_double(expected_energy(model.tree, p)).c_str(), run.packets, run.control_messages);
  return 0;
}

int cmd_baseline(const std::string& model_path, const std::optional<double>& budget_flag, const Common& c) {
  const ModelFile model = read_model(model_path);
  const double budget = resolve_budget(model, budget_flag);
  const DeterministicResult res = best_deterministic(model.system, model.tree, budget);
  write_csv_file(output_path(c.out_dir, "baseline.csv"), [&](std::ostream& os) { write_baseline_csv(os, res); });
  std::printf("best fixed tree {%s}: energy %s, trace P_inf %s (%zu candidates)\n", res.best.tree.to_string().c_str(),
              format_double(res.best.energy).c_str(), format_double(res.best.trace).c_str(), res.candidates.size());
  return 0;
}

int cmd_diffusion(const std::string& config_path, const Common& c, bool seed_given) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = read_experiment_config(config_path);
  DiffusionConfig dc = cfg.diffusion;
  if (seed_given) dc.seed = c.seed;
  const DiffusionInstance inst = generate_instance(dc);
  write_model(output_path(c.out_dir, "model.json"), ModelFile{inst.system, inst.tree, inst.budget});
  write_csv_file(output_path(c.out_dir, "positions.csv"),
                 [&](std::ostream& os) { write_positions_csv(os, inst.positions, inst.tree); });
  std::printf("n = %ld states, m = %zu sensors, %zu placement draw(s)\n", static_cast<long>(inst.system.n()),
              inst.tree.size(), inst.placement_attempts);
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::optional<std::size_t>& trials, const Common& c,
                   bool seed_given) {
  ExperimentConfig cfg = read_experiment_config(config_path);
  if (trials) cfg.trials = *trials;
  if (seed_given) cfg.seed = c.seed;
  if (cfg.trials == 0) throw Error(ErrorKind::InvalidArgument, "--trials must be positive");
  const ExperimentResult res = run_experiment(cfg);
  for (const auto& t : res.trials)
    if (t.failed_attempts) std::fprintf(stderr, "trial %zu: %zu failed attempt(s): %s\n", t.trial, t.failed_attempts,
                                        t.failure.c_str());
  write_csv_file(output_path(c.out_dir, "ratios.csv"), [&](std::ostream& os) { write_ratios_csv(os, res); });

  nlohmann::json summary;
  summary["trials"] = cfg.trials;
  summary["seed"] = cfg.seed;
  summary["skipped"] = res.skipped;
  summary["failed_attempts"] = res.failed_attempts;
  summary["mean_ratio"] = res.mean_ratio;
  summary["ratios_at_least_one"] = res.ratios_at_least_one;

  // Trace evolution on the first trial that produced an instance.
  for (const auto& t : res.trials) {
    if (!t.ok) continue;
    const TrialArtifacts a = evaluate_instance(cfg, t.instance_seed);
    const TracePath tp = trace_path(cfg, a, derive_seed(t.instance_seed, 3));
    write_csv_file(output_path(c.out_dir, "trace_path.csv"), [&](std::ostream& os) { write_trace_path_csv(os, tp); });
    summary["trace_path_trial"] = t.trial;
    break;
  }
  write_text_file(output_path(c.out_dir, "summary.json"), summary.dump(2) + "\n");
  std::printf("%zu/%zu ratios >= 1, mean ratio %.6f, %zu skipped\n", res.ratios_at_least_one,
              cfg.trials - res.skipped, res.mean_ratio, res.skipped);
  if (res.too_many_skipped(cfg)) {
    std::fprintf(stderr, "too many failed placements: %zu attempts over %zu trials\n", res.failed_attempts,
                 cfg.trials);
    return kExitInfeasible;
  }
  return 0;
}

int cmd_selftest(bool quick, const std::vector<int>& only, const Common& c) {
  suite::Scale scale;
  scale.quick = quick;
  scale.only = only;
  scale.out_dir = c.out_dir;
  fs::create_directories(c.out_dir);
  int failures = 0;
  suite::run_all(scale, [&](const suite::Outcome& o) {
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", o.id, o.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  });
  return failures ? kExitSelftest : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic sensor selection over tree networks"};
  app.require_subcommand(1);
  Common common;
  bool seed_given = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, "Output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
          common.seed = s;
          seed_given = true;
        },
        "Random seed");
  };

  std::string model_path, config_path, p_text;
  std::optional<double> budget;
  std::optional<std::size_t> trials;
  std::size_t rounds = 10000, steps = 200;
  bool quick = false;
  std::vector<int> only;

  auto* optimize = app.add_subcommand("optimize", "Greedy marginal schedule for a model");
  optimize->add_option("model", model_path, "Model JSON file")->required();
  optimize->add_option("--budget", budget, "Energy budget (overrides the model file)");
  add_common(optimize);

  auto* decompose_cmd = app.add_subcommand("decompose", "Tree distribution realizing given marginals");
  decompose_cmd->add_option("model", model_path, "Model JSON file")->required();
  decompose_cmd->add_option("--p", p_text, "Comma-separated marginals p_1..p_m")->required();
  add_common(decompose_cmd);

  auto* simulate = app.add_subcommand("simulate", "Run the shared-seed protocol and a covariance sample path");
  simulate->add_option("model", model_path, "Model JSON file")->required();
  simulate->add_option("--p", p_text, "Marginals; the greedy schedule is used when omitted");
  simulate->add_option("--budget", budget, "Energy budget for the greedy schedule");
  simulate->add_option("--rounds", rounds, "Protocol rounds");
  simulate->add_option("--steps", steps, "Sample path length");
  add_common(simulate);

  auto* baseline = app.add_subcommand("baseline", "Best fixed transmission tree under the budget");
  baseline->add_option("model", model_path, "Model JSON file")->required();
  baseline->add_option("--budget", budget, "Energy budget (overrides the model file)");
  add_common(baseline);

  auto* diffusion = app.add_subcommand("diffusion", "Generate a diffusion-field instance");
  diffusion->add_option("--config", config_path, "Experiment config JSON (its diffusion block is used)");
  add_common(diffusion);

  auto* experiment = app.add_subcommand("experiment", "Randomized deterministic-vs-stochastic study");
  experiment->add_option("config", config_path, "Experiment config JSON")->required();
  experiment->add_option("--trials", trials, "Number of placements");
  add_common(experiment);

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance property suite");
  selftest->add_flag("--quick", quick, "Reduced sizes for a fast check");
  selftest->add_option("--criteria", only, "Comma-separated criterion ids (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 11));
  add_common(selftest);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return cmd_optimize(model_path, budget, common);
    if (*decompose_cmd) return cmd_decompose(model_path, p_text, common);
    if (*simulate) return cmd_simulate(model_path, p_text, budget, rounds, steps, common);
    if (*baseline) return cmd_baseline(model_path, budget, common);
    if (*diffusion) return cmd_diffusion(config_path, common, seed_given);
    if (*experiment) return cmd_experiment(config_path, trials, common, seed_given);
    if (*selftest) return cmd_selftest(quick, only, common);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
