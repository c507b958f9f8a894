#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/model.hpp"

namespace treesel {

/// Nested-chain realization of a marginal schedule. Sensors are sorted by
/// decreasing p; T_j adds the j-th sensor to T_{j-1} and carries mass
/// p_{i_j} - p_{i_{j+1}}. Among equal values an ancestor always precedes its
/// descendants and otherwise lower ids go first, so every T_j is parent-closed.
/// Zero-mass chain members are dropped; the empty tree comes first.
inline TreeDistribution decompose(const SensorTree& tree, const MarginalSchedule& p) {
  const std::size_t m = tree.size();
  if (p.size() != static_cast<Eigen::Index>(m))
    throw Error(ErrorKind::DimensionMismatch, "schedule length differs from sensor count");
  auto value = [&](std::size_t id) { return p(static_cast<Eigen::Index>(id - 1)); };
  for (std::size_t i = 1; i <= m; ++i) {
    if (!(value(i) >= 0.0 && value(i) <= 1.0))
      throw Error(ErrorKind::OrderingViolated, "p_" + std::to_string(i) + " lies outside [0, 1]");
    const std::size_t parent = tree.parent(i);
    if (parent != 0 && value(i) > value(parent))
      throw Error(ErrorKind::OrderingViolated,
                  "p_" + std::to_string(i) + " exceeds the probability of its parent " + std::to_string(parent));
  }

  std::vector<std::size_t> ids(m);
  for (std::size_t i = 0; i < m; ++i) ids[i] = i + 1;
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return value(a) > value(b); });

  // Within each run of equal values, emit a topological order that prefers
  // the lowest available id.
  std::vector<std::size_t> order;
  order.reserve(m);
  std::vector<bool> placed(m + 1, false);
  for (std::size_t start = 0; start < m;) {
    std::size_t stop = start;
    while (stop < m && value(ids[stop]) == value(ids[start])) ++stop;
    std::vector<std::size_t> group(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                   ids.begin() + static_cast<std::ptrdiff_t>(stop));
    std::sort(group.begin(), group.end());
    while (!group.empty()) {
      auto it = std::find_if(group.begin(), group.end(), [&](std::size_t id) {
        const std::size_t parent = tree.parent(id);
        return parent == 0 || placed[parent];
      });
      placed[*it] = true;
      order.push_back(*it);
      group.erase(it);
    }
    start = stop;
  }

  TreeDistribution dist;
  std::vector<std::size_t> members;
  const double first = m ? value(order[0]) : 0.0;
  if (1.0 - first > 0.0 || m == 0) dist.entries.push_back({SubTree{}, m ? 1.0 - first : 1.0});
  for (std::size_t j = 0; j < m; ++j) {
    members.push_back(order[j]);
    const double next = j + 1 < m ? value(order[j + 1]) : 0.0;
    const double mass = value(order[j]) - next;
    if (mass > 0.0) dist.entries.push_back({SubTree(members), mass});
  }
  return dist;
}

/// p_i = sum of the masses of trees containing sensor i.
inline MarginalSchedule marginals_of(const TreeDistribution& dist, std::size_t m) {
  MarginalSchedule p = MarginalSchedule::Zero(static_cast<Eigen::Index>(m));
  for (const auto& e : dist.entries) {
    for (std::size_t id : e.tree.members()) {
      if (id == 0 || id > m) throw Error(ErrorKind::InvalidSubtree, "sensor id out of range");
      p(static_cast<Eigen::Index>(id - 1)) += e.probability;
    }
  }
  return p;
}

}  // namespace treesel
