#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"
#include "treesel/lowerbound.hpp"
#include "treesel/model.hpp"
#include "treesel/parallel.hpp"
#include "treesel/riccati.hpp"

namespace treesel {

inline constexpr std::size_t kMaxEnumeratedTrees = 1000000;

namespace detail {

/// Parent-closed sets hanging below `node` (excluding node itself) whose
/// energy fits in `budget`. Each child either stays out or joins with one
/// of its own rooted sets.
inline std::vector<std::vector<std::size_t>> rooted_below(const SensorTree& tree, std::size_t node, double budget) {
  std::vector<std::pair<std::vector<std::size_t>, double>> acc{{{}, 0.0}};
  for (std::size_t c : tree.children(node)) {
    const double edge = tree.cost(c);
    if (edge > budget) continue;
    const auto below = rooted_below(tree, c, budget - edge);
    std::vector<std::pair<std::vector<std::size_t>, double>> next;
    for (const auto& [members, energy] : acc) {
      next.push_back({members, energy});
      for (const auto& sub : below) {
        double e = energy + edge;
        for (std::size_t id : sub) e += tree.cost(id);
        if (e > budget) continue;
        auto merged = members;
        merged.push_back(c);
        merged.insert(merged.end(), sub.begin(), sub.end());
        next.push_back({std::move(merged), e});
        if (next.size() > kMaxEnumeratedTrees)
          throw Error(ErrorKind::TooManyTrees, "more than 1e6 subtrees fit the budget");
      }
    }
    acc = std::move(next);
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(acc.size());
  for (auto& [members, energy] : acc) out.push_back(std::move(members));
  return out;
}

}  // namespace detail

/// Every subtree (the empty one included) with tree_energy <= budget, sorted.
inline std::vector<SubTree> enumerate_subtrees(const SensorTree& tree, double budget) {
  if (std::isnan(budget)) throw Error(ErrorKind::InvalidArgument, "budget is NaN");
  std::vector<SubTree> out;
  if (budget < 0.0) return out;
  for (auto& members : detail::rooted_below(tree, 0, budget)) out.emplace_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

struct DeterministicCandidate {
  SubTree tree;
  double energy = 0.0;
  double trace = std::numeric_limits<double>::infinity();  ///< +inf when (C_T, A) is undetectable
  Matrix P_inf;
};

struct DeterministicResult {
  DeterministicCandidate best;
  std::vector<DeterministicCandidate> candidates;  ///< all affordable trees, enumeration order
};

/// Fixed point of g_T from Sigma0 for every affordable tree; the winner has
/// the smallest trace, ties (relative 1e-12) going to lower energy and then
/// to the lexicographically smaller member list.
inline DeterministicResult best_deterministic(const LinearSystem& sys, const SensorTree& tree, double budget,
                                              const FixedPointOptions& opt = {}) {
  std::vector<SubTree> trees = enumerate_subtrees(tree, budget);
  DeterministicResult out;
  out.candidates.resize(trees.size());
  parallel_blocks(trees.size(), [&](std::size_t j) {
    DeterministicCandidate& cand = out.candidates[j];
    cand.tree = trees[j];
    cand.energy = tree_energy(tree, trees[j]);
    if (!is_detectable(sys.A, stacked_rows(sys, trees[j]))) return;
    const FixedPointResult fp =
        detail::iterate_to_fixed_point(sys, sys.Sigma0, information_matrix(sys, trees[j]), trees[j].empty(), opt);
    cand.P_inf = fp.value;
    cand.trace = fp.value.trace();
  });

  std::optional<std::size_t> winner;
  for (std::size_t j = 0; j < out.candidates.size(); ++j) {
    const auto& c = out.candidates[j];
    if (!std::isfinite(c.trace)) continue;
    if (!winner) {
      winner = j;
      continue;
    }
    const auto& w = out.candidates[*winner];
    const double scale = std::max(std::abs(c.trace), std::abs(w.trace));
    if (c.trace < w.trace - 1e-12 * scale) {
      winner = j;
    } else if (std::abs(c.trace - w.trace) <= 1e-12 * scale) {
      if (c.energy < w.energy || (c.energy == w.energy && c.tree < w.tree)) winner = j;
    }
  }
  if (!winner) throw Error(ErrorKind::Diverged, "no affordable tree makes (C_T, A) detectable");
  out.best = out.candidates[*winner];
  return out;
}

}  // namespace treesel
