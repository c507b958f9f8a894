#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"
#include "treesel/model.hpp"
#include "treesel/parallel.hpp"
#include "treesel/rng.hpp"

namespace treesel {

/// One prediction + update of the error covariance given the summed
/// information of the reporting sensors: [(A X A' + Q)^{-1} + info]^{-1}.
/// A zero information term is the pure prediction A X A' + Q.
inline Matrix riccati_step(const LinearSystem& sys, const Matrix& x, const Matrix& info, bool info_is_zero = false) {
  Matrix pred = symmetrize(sys.A * x * sys.A.transpose() + sys.Q);
  if (info_is_zero) return pred;
  return spd_inverse(symmetrize(spd_inverse(pred) + info));
}

/// The Riccati map g_T of transmission tree T.
inline Matrix riccati_map(const LinearSystem& sys, const SensorTree& tree, const Matrix& x, const SubTree& t) {
  if (!is_valid_subtree(tree, t))
    throw Error(ErrorKind::InvalidSubtree, "{" + t.to_string() + "} is not closed under parent");
  return riccati_step(sys, x, information_matrix(sys, t), t.empty());
}

namespace detail {

/// Pre-factored view of a tree distribution used by every Monte Carlo path.
class PathSampler {
 public:
  PathSampler(const LinearSystem& sys, const SensorTree& tree, const TreeDistribution& dist) : sys_(&sys) {
    validate_distribution(tree, dist);
    double cum = 0.0;
    for (const auto& e : dist.entries) {
      cum += e.probability;
      cumulative_.push_back(cum);
      info_.push_back(information_matrix(sys, e.tree));
      empty_.push_back(e.tree.empty());
      if (e.probability > 0.0) last_positive_ = infos() - 1;
    }
  }

  std::size_t infos() const noexcept { return info_.size(); }

  /// Inverse-CDF choice of the support entry for a uniform alpha.
  std::size_t choose(double alpha) const noexcept {
    for (std::size_t j = 0; j < cumulative_.size(); ++j) {
      if (alpha < cumulative_[j] && (j == 0 || cumulative_[j] > cumulative_[j - 1])) return j;
    }
    return last_positive_;
  }

  Matrix step(const Matrix& x, std::size_t j) const { return riccati_step(*sys_, x, info_[j], empty_[j]); }

 private:
  const LinearSystem* sys_;
  std::vector<double> cumulative_;
  std::vector<Matrix> info_;
  std::vector<bool> empty_;
  std::size_t last_positive_ = 0;
};

struct Welford {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }

  double variance() const { return count > 1.0 ? std::max(0.0, m2 / (count - 1.0)) : 0.0; }
  double stderr_of_mean() const { return count > 0.0 ? std::sqrt(variance() / count) : 0.0; }
};

struct MatrixWelford {
  double count = 0.0;
  Matrix mean;
  Matrix m2;

  void add(const Matrix& x) {
    if (count == 0.0) {
      mean = Matrix::Zero(x.rows(), x.cols());
      m2 = Matrix::Zero(x.rows(), x.cols());
    }
    count += 1.0;
    const Matrix delta = x - mean;
    mean += delta / count;
    m2.array() += delta.array() * (x - mean).array();
  }

  void merge(const MatrixWelford& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const Matrix delta = o.mean - mean;
    mean += delta * (o.count / total);
    m2.array() += o.m2.array() + delta.array().square() * (count * o.count / total);
    count = total;
  }
};

inline constexpr std::size_t kTrialsPerBlock = 32;

inline std::size_t block_count(std::size_t trials) { return (trials + kTrialsPerBlock - 1) / kTrialsPerBlock; }

}  // namespace detail

struct SamplePath {
  std::vector<double> trace;             ///< trace(P_k), k = 1..N
  std::vector<std::size_t> tree_index;  ///< support entry drawn at step k
};

/// Draws one tree per step from dist (inverse CDF on a splitmix64 stream) and
/// applies its Riccati map starting from P_0 = Sigma0.
inline SamplePath sample_path(const LinearSystem& sys, const SensorTree& tree, const TreeDistribution& dist,
                              std::uint64_t seed, std::size_t steps) {
  const detail::PathSampler sampler(sys, tree, dist);
  SplitMix64 rng(seed);
  SamplePath path;
  path.trace.reserve(steps);
  path.tree_index.reserve(steps);
  Matrix p = sys.Sigma0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t j = sampler.choose(rng.uniform());
    p = sampler.step(p, j);
    path.trace.push_back(p.trace());
    path.tree_index.push_back(j);
  }
  return path;
}

struct CovarianceEstimate {
  Matrix mean;
  Matrix std_error;  ///< elementwise standard error of the mean
  std::size_t trials = 0;
};

/// Monte Carlo estimate of E P_k over `trials` independent paths; trial t uses
/// the stream derive_seed(seed, t).
inline CovarianceEstimate expected_P(const LinearSystem& sys, const SensorTree& tree, const TreeDistribution& dist,
                                     std::size_t k, std::size_t trials, std::uint64_t seed) {
  if (trials < 2) throw Error(ErrorKind::InvalidArgument, "expected_P needs at least two trials");
  const detail::PathSampler sampler(sys, tree, dist);
  std::vector<detail::MatrixWelford> blocks(detail::block_count(trials));
  parallel_blocks(blocks.size(), [&](std::size_t b) {
    const std::size_t end = std::min(trials, (b + 1) * detail::kTrialsPerBlock);
    for (std::size_t t = b * detail::kTrialsPerBlock; t < end; ++t) {
      SplitMix64 rng(derive_seed(seed, t));
      Matrix p = sys.Sigma0;
      for (std::size_t step = 0; step < k; ++step) p = sampler.step(p, sampler.choose(rng.uniform()));
      blocks[b].add(p);
    }
  });
  detail::MatrixWelford total;
  for (const auto& b : blocks) total.merge(b);
  CovarianceEstimate est;
  est.mean = total.mean;
  est.trials = trials;
  est.std_error = (total.m2.array() / (total.count - 1.0) / total.count).max(0.0).sqrt().matrix();
  return est;
}

struct TraceSeries {
  std::vector<double> mean;    ///< mean trace(P_k), k = 0..steps
  std::vector<double> std_error;  ///< standard error of each mean
  std::size_t trials = 0;
};

/// Per-step Monte Carlo mean of trace(P_k) with standard errors, k = 0..steps.
inline TraceSeries expected_trace_series(const LinearSystem& sys, const SensorTree& tree, const TreeDistribution& dist,
                                         std::size_t steps, std::size_t trials, std::uint64_t seed) {
  if (trials < 2) throw Error(ErrorKind::InvalidArgument, "expected_trace_series needs at least two trials");
  const detail::PathSampler sampler(sys, tree, dist);
  std::vector<std::vector<detail::Welford>> blocks(detail::block_count(trials),
                                                   std::vector<detail::Welford>(steps + 1));
  parallel_blocks(blocks.size(), [&](std::size_t b) {
    const std::size_t end = std::min(trials, (b + 1) * detail::kTrialsPerBlock);
    for (std::size_t t = b * detail::kTrialsPerBlock; t < end; ++t) {
      SplitMix64 rng(derive_seed(seed, t));
      Matrix p = sys.Sigma0;
      blocks[b][0].add(p.trace());
      for (std::size_t step = 1; step <= steps; ++step) {
        p = sampler.step(p, sampler.choose(rng.uniform()));
        blocks[b][step].add(p.trace());
      }
    }
  });
  TraceSeries out;
  out.trials = trials;
  for (std::size_t step = 0; step <= steps; ++step) {
    detail::Welford acc;
    for (const auto& b : blocks) acc.merge(b[step]);
    out.mean.push_back(acc.mean);
    out.std_error.push_back(acc.stderr_of_mean());
  }
  return out;
}

struct AsymptoticOptions {
  std::size_t burn_in = 200;
  std::size_t horizon = 1000;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
};

struct AsymptoticEstimate {
  double trace = 0.0;   ///< estimate of trace g^infinity(Sigma0)
  double std_error = 0.0;  ///< standard error across independent trials
  std::size_t trials = 0;
};

/// True when some support tree with positive mass gives a detectable (C_T, A).
inline bool has_detectable_support(const LinearSystem& sys, const TreeDistribution& dist) {
  for (const auto& e : dist.entries) {
    if (e.probability > 0.0 && is_detectable(sys.A, stacked_rows(sys, e.tree))) return true;
  }
  return false;
}

/// Averages trace(P_k) over k in [burn_in, horizon] on each trial and then
/// across trials. Throws Diverged when no positively weighted tree is
/// detectable or when any running mean exceeds 1e6 * trace(Sigma0).
inline AsymptoticEstimate asymptotic_expected_trace(const LinearSystem& sys, const SensorTree& tree,
                                                    const TreeDistribution& dist, const AsymptoticOptions& opt) {
  if (opt.trials < 2) throw Error(ErrorKind::InvalidArgument, "asymptotic estimate needs at least two trials");
  if (opt.horizon < opt.burn_in || opt.horizon == 0)
    throw Error(ErrorKind::InvalidArgument, "horizon must be positive and >= burn_in");
  validate_distribution(tree, dist);
  if (!has_detectable_support(sys, dist))
    throw Error(ErrorKind::Diverged, "no tree with positive probability makes (C_T, A) detectable");
  const detail::PathSampler sampler(sys, tree, dist);
  const double limit = 1e6 * sys.Sigma0.trace();
  const std::size_t first = std::max<std::size_t>(opt.burn_in, 1);
  std::vector<detail::Welford> blocks(detail::block_count(opt.trials));
  parallel_blocks(blocks.size(), [&](std::size_t b) {
    const std::size_t end = std::min(opt.trials, (b + 1) * detail::kTrialsPerBlock);
    for (std::size_t t = b * detail::kTrialsPerBlock; t < end; ++t) {
      SplitMix64 rng(derive_seed(opt.seed, t));
      Matrix p = sys.Sigma0;
      double running = 0.0;
      double window = 0.0;
      for (std::size_t step = 1; step <= opt.horizon; ++step) {
        p = sampler.step(p, sampler.choose(rng.uniform()));
        const double tr = p.trace();
        running += (tr - running) / static_cast<double>(step);
        if (!std::isfinite(running) || running > limit)
          throw Error(ErrorKind::Diverged, "running mean of trace(P_k) exceeded 1e6 * trace(Sigma0)");
        if (step >= first) window += tr;
      }
      blocks[b].add(window / static_cast<double>(opt.horizon - first + 1));
    }
  });
  detail::Welford total;
  for (const auto& b : blocks) total.merge(b);
  if (!std::isfinite(total.mean) || total.mean > limit)
    throw Error(ErrorKind::Diverged, "estimated asymptotic trace exceeded 1e6 * trace(Sigma0)");
  return {total.mean, total.stderr_of_mean(), opt.trials};
}

}  // namespace treesel
