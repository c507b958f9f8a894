#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treesel/baseline.hpp"
#include "treesel/decompose.hpp"
#include "treesel/error.hpp"
#include "treesel/io.hpp"
#include "treesel/parallel.hpp"
#include "treesel/polytope.hpp"
#include "treesel/protocol.hpp"
#include "treesel/riccati.hpp"
#include "treesel/scheduler.hpp"
#include "treesel/testbed.hpp"

namespace treesel {

// Randomized diffusion study: per placement, the stochastic schedule
// (greedy + nested decomposition) against the best fixed tree.

struct ExperimentConfig {
  DiffusionConfig diffusion;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  AsymptoticOptions asymptotic{};
  std::size_t protocol_rounds = 10000;
  std::size_t path_steps = 200;    ///< length of the trace-evolution series
  std::size_t path_trials = 20000;  ///< Monte Carlo paths behind its mean
  std::size_t max_attempts = 5;    ///< placements tried per trial before it is skipped
  double max_skip_fraction = 0.1;
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    auto get = [&](const nlohmann::json& obj, const char* key, auto& value) {
      if (obj.contains(key)) value = obj.at(key).get<std::decay_t<decltype(value)>>();
    };
    get(j, "trials", cfg.trials);
    get(j, "seed", cfg.seed);
    get(j, "protocol_rounds", cfg.protocol_rounds);
    get(j, "path_steps", cfg.path_steps);
    get(j, "path_trials", cfg.path_trials);
    get(j, "max_attempts", cfg.max_attempts);
    get(j, "max_skip_fraction", cfg.max_skip_fraction);
    if (j.contains("asymptotic")) {
      const auto& a = j.at("asymptotic");
      get(a, "burn_in", cfg.asymptotic.burn_in);
      get(a, "horizon", cfg.asymptotic.horizon);
      get(a, "trials", cfg.asymptotic.trials);
    }
    if (j.contains("diffusion")) {
      const auto& d = j.at("diffusion");
      DiffusionConfig& dc = cfg.diffusion;
      get(d, "side_length", dc.side_length);
      get(d, "alpha", dc.alpha);
      get(d, "grid_spacing", dc.grid_spacing);
      get(d, "time_step", dc.time_step);
      get(d, "sensor_count", dc.sensor_count);
      get(d, "process_noise", dc.process_noise);
      get(d, "measurement_noise", dc.measurement_noise);
      get(d, "initial_variance", dc.initial_variance);
      get(d, "budget", dc.budget);
      get(d, "cost_offset", dc.cost_offset);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  if (cfg.trials == 0 || cfg.max_attempts == 0) throw Error(ErrorKind::InvalidArgument, "trials must be positive");
  validate_config(cfg.diffusion);
  return cfg;
}

inline ExperimentConfig read_experiment_config(const std::string& path) {
  return experiment_config_from_json(detail::parse_json_file(path));
}

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t instance_seed = 0;
  std::size_t failed_attempts = 0;
  bool ok = false;
  std::string failure;  ///< last error when !ok
  double ratio = 0.0;   ///< deterministic / stochastic asymptotic trace
  double deterministic_trace = 0.0;
  double stochastic_trace = 0.0;
  double stochastic_std_error = 0.0;
  double lower_bound_trace = 0.0;
  double protocol_energy = 0.0;
  std::size_t support_size = 0;
  SubTree deterministic_tree;
};

struct TrialArtifacts {
  DiffusionInstance instance;
  GreedyTrace greedy;
  TreeDistribution distribution;
  DeterministicResult deterministic;
  AsymptoticEstimate stochastic;
};

/// Full pipeline on one placement. Throws on any failure.
inline TrialArtifacts evaluate_instance(const ExperimentConfig& cfg, std::uint64_t instance_seed) {
  DiffusionConfig dc = cfg.diffusion;
  dc.seed = instance_seed;
  TrialArtifacts a;
  a.instance = generate_instance(dc);
  const LinearSystem& sys = a.instance.system;
  const SensorTree& tree = a.instance.tree;
  const FeasibleSet fs(tree, a.instance.budget);
  a.greedy = greedy_optimize(sys, fs);
  a.distribution = decompose(tree, a.greedy.p_star);
  AsymptoticOptions opt = cfg.asymptotic;
  opt.seed = derive_seed(instance_seed, 1);
  a.stochastic = asymptotic_expected_trace(sys, tree, a.distribution, opt);
  a.deterministic = best_deterministic(sys, tree, a.instance.budget);
  return a;
}

inline TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  TrialResult r;
  r.trial = trial;
  const std::uint64_t trial_seed = derive_seed(cfg.seed, trial);
  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const std::uint64_t instance_seed = derive_seed(trial_seed, attempt);
    try {
      const TrialArtifacts a = evaluate_instance(cfg, instance_seed);
      const RunSummary run =
          simulate_run(a.instance.tree, a.greedy.p_star, derive_seed(instance_seed, 2), cfg.protocol_rounds);
      r.instance_seed = instance_seed;
      r.ok = true;
      r.deterministic_trace = a.deterministic.best.trace;
      r.stochastic_trace = a.stochastic.trace;
      r.stochastic_std_error = a.stochastic.std_error;
      r.ratio = r.deterministic_trace / r.stochastic_trace;
      r.lower_bound_trace = a.greedy.L_inf.trace();
      r.protocol_energy = run.mean_energy;
      r.support_size = a.distribution.size();
      r.deterministic_tree = a.deterministic.best.tree;
      return r;
    } catch (const Error& e) {
      ++r.failed_attempts;
      r.failure = e.what();
    }
  }
  return r;
}

struct ExperimentResult {
  std::vector<TrialResult> trials;  ///< ordered by trial index
  std::size_t failed_attempts = 0;
  std::size_t skipped = 0;
  double mean_ratio = 0.0;
  std::size_t ratios_at_least_one = 0;

  bool too_many_skipped(const ExperimentConfig& cfg) const {
    return static_cast<double>(failed_attempts) > cfg.max_skip_fraction * static_cast<double>(cfg.trials);
  }
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  out.trials.resize(cfg.trials);
  parallel_blocks(cfg.trials, [&](std::size_t t) { out.trials[t] = run_trial(cfg, t); });
  std::size_t ok = 0;
  for (const auto& t : out.trials) {
    out.failed_attempts += t.failed_attempts;
    if (!t.ok) {
      ++out.skipped;
      continue;
    }
    ++ok;
    out.mean_ratio += t.ratio;
    if (t.ratio >= 1.0) ++out.ratios_at_least_one;
  }
  if (ok) out.mean_ratio /= static_cast<double>(ok);
  return out;
}

/// Trace evolution on one instance: the best fixed tree's trace(P_k), a
/// single stochastic sample path, and the Monte Carlo mean of trace(P_k).
struct TracePath {
  std::vector<double> deterministic;
  std::vector<double> sample_path;
  TraceSeries expected;
};

inline TracePath trace_path(const ExperimentConfig& cfg, const TrialArtifacts& a, std::uint64_t seed) {
  const LinearSystem& sys = a.instance.system;
  const SensorTree& tree = a.instance.tree;
  TracePath out;
  Matrix p = sys.Sigma0;
  out.deterministic.push_back(p.trace());
  for (std::size_t k = 1; k <= cfg.path_steps; ++k) {
    p = riccati_map(sys, tree, p, a.deterministic.best.tree);
    out.deterministic.push_back(p.trace());
  }
  const SamplePath path = sample_path(sys, tree, a.distribution, derive_seed(seed, 0), cfg.path_steps);
  out.sample_path.push_back(sys.Sigma0.trace());
  out.sample_path.insert(out.sample_path.end(), path.trace.begin(), path.trace.end());
  out.expected = expected_trace_series(sys, tree, a.distribution, cfg.path_steps, cfg.path_trials, derive_seed(seed, 1));
  return out;
}

inline void write_ratios_csv(std::ostream& out, const ExperimentResult& res) {
  out << "trial,instance_seed,ratio,trace_P_inf_deterministic,trace_EP_inf_stochastic,std_error,trace_L_inf,"
         "deterministic_tree\n";
  for (const auto& t : res.trials) {
    if (!t.ok) continue;
    out << t.trial << ',' << t.instance_seed << ',' << format_double(t.ratio) << ','
        << format_double(t.deterministic_trace) << ',' << format_double(t.stochastic_trace) << ','
        << format_double(t.stochastic_std_error) << ',' << format_double(t.lower_bound_trace) << ','
        << t.deterministic_tree.to_string() << '\n';
  }
}

inline void write_trace_path_csv(std::ostream& out, const TracePath& tp) {
  out << "step,deterministic_trace_P,sample_path_trace_P,mean_trace_P,mean_std_error\n";
  for (std::size_t k = 0; k < tp.deterministic.size(); ++k)
    out << k << ',' << format_double(tp.deterministic[k]) << ',' << format_double(tp.sample_path[k]) << ','
        << format_double(tp.expected.mean[k]) << ',' << format_double(tp.expected.std_error[k]) << '\n';
}

}  // namespace treesel
