#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/model.hpp"

namespace treesel {

/// The feasible marginals
///   { p in [0,1]^m : sum_i c_i p_i <= budget, p_i <= p_parent(i) }.
/// Any p satisfying the box and ordering constraints is realized by some
/// distribution over subtrees, and its expected energy is sum_i c_i p_i.
struct FeasibleSet {
  SensorTree tree;
  double budget = 0.0;

  FeasibleSet() = default;
  FeasibleSet(SensorTree t, double energy_budget) : tree(std::move(t)), budget(energy_budget) {
    if (!(budget >= 0.0) || !std::isfinite(budget))
      throw Error(ErrorKind::InvalidArgument, "energy budget must be finite and >= 0");
  }

  std::size_t size() const noexcept { return tree.size(); }
};

inline constexpr double kMembershipSlack = 1e-12;

inline double expected_energy(const SensorTree& tree, const MarginalSchedule& p) {
  double e = 0.0;
  for (std::size_t i = 1; i <= tree.size(); ++i) e += tree.cost(i) * p(static_cast<Eigen::Index>(i - 1));
  return e;
}

/// Box and ordering constraints only: exactly the marginals some tree
/// distribution realizes.
inline bool feasibility_of_marginals(const SensorTree& tree, const MarginalSchedule& p, double slack = 0.0) {
  if (p.size() != static_cast<Eigen::Index>(tree.size())) return false;
  if (!p.allFinite()) return false;
  for (std::size_t i = 1; i <= tree.size(); ++i) {
    const double pi = p(static_cast<Eigen::Index>(i - 1));
    if (pi < -slack || pi > 1.0 + slack) return false;
    const std::size_t parent = tree.parent(i);
    if (parent != 0 && pi > p(static_cast<Eigen::Index>(parent - 1)) + slack) return false;
  }
  return true;
}

inline bool contains(const FeasibleSet& fs, const MarginalSchedule& p) {
  if (p.size() != static_cast<Eigen::Index>(fs.size()) || !p.allFinite()) return false;
  if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) return false;
  if (expected_energy(fs.tree, p) > fs.budget + kMembershipSlack) return false;
  return feasibility_of_marginals(fs.tree, p, kMembershipSlack);
}

namespace detail {

/// Weighted least-squares fit under x_child <= x_parent (sensors hanging off
/// the fusion center are unconstrained from above). Blocks of tied nodes are
/// grown by always taking the active block with the largest mean: a root
/// block is final, any other block joins its parent's block.
inline Vector tree_isotonic_regression(const SensorTree& tree, const Vector& y, const Vector& w) {
  const std::size_t m = tree.size();
  struct Block {
    std::size_t head;
    double wsum;
    double wysum;
    bool final = false;
    bool alive = true;
  };
  std::vector<Block> blocks;
  blocks.reserve(m);
  std::vector<std::size_t> block_of(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    const auto k = static_cast<Eigen::Index>(i - 1);
    blocks.push_back({i, w(k), w(k) * y(k)});
    block_of[i] = i - 1;
  }
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 1; i <= m; ++i) members[i - 1] = {i};

  for (std::size_t remaining = m; remaining > 0;) {
    std::size_t best = m;
    double best_mean = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      if (!blocks[b].alive || blocks[b].final) continue;
      const double mean = blocks[b].wysum / blocks[b].wsum;
      if (best == m || mean > best_mean) {
        best = b;
        best_mean = mean;
      }
    }
    Block& blk = blocks[best];
    const std::size_t parent = tree.parent(blk.head);
    if (parent == 0 || blocks[block_of[parent]].final) {
      blk.final = true;
      --remaining;
      continue;
    }
    const std::size_t target = block_of[parent];
    blocks[target].wsum += blk.wsum;
    blocks[target].wysum += blk.wysum;
    for (std::size_t id : members[best]) block_of[id] = target;
    members[target].insert(members[target].end(), members[best].begin(), members[best].end());
    members[best].clear();
    blk.alive = false;
    --remaining;
  }

  Vector x(static_cast<Eigen::Index>(m));
  for (std::size_t i = 1; i <= m; ++i) {
    const Block& b = blocks[block_of[i]];
    x(static_cast<Eigen::Index>(i - 1)) = b.wysum / b.wsum;
  }
  // Rounding in block means can leave a child one ulp above its parent.
  for (std::size_t id : tree.topological_order()) {
    const std::size_t parent = tree.parent(id);
    if (parent != 0) {
      auto& xi = x(static_cast<Eigen::Index>(id - 1));
      xi = std::min(xi, x(static_cast<Eigen::Index>(parent - 1)));
    }
  }
  return x;
}

/// Projection onto box + ordering: clipping commutes with isotonic regression.
inline Vector project_box_ordering(const SensorTree& tree, const Vector& q) {
  const Vector ones = Vector::Ones(q.size());
  return tree_isotonic_regression(tree, q, ones).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace detail

/// Euclidean projection onto the feasible set. The energy constraint is
/// handled through its multiplier lambda >= 0: p(lambda) is the box/ordering
/// projection of q - lambda c, and sum c_i p_i(lambda) is nonincreasing in
/// lambda, so lambda is found by bisection.
inline MarginalSchedule project(const FeasibleSet& fs, const Vector& q) {
  if (q.size() != static_cast<Eigen::Index>(fs.size()))
    throw Error(ErrorKind::DimensionMismatch, "vector length differs from sensor count");
  if (fs.size() == 0) return q;
  Vector c(q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) c(k) = fs.tree.cost(static_cast<std::size_t>(k + 1));

  auto at = [&](double lambda) { return detail::project_box_ordering(fs.tree, q - lambda * c); };
  Vector p = at(0.0);
  if (c.dot(p) <= fs.budget) return p;

  double lo = 0.0;
  double hi = std::max(0.0, (q.array() / c.array()).maxCoeff());
  Vector p_hi = at(hi);
  for (int it = 0; it < 200 && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    Vector pm = at(mid);
    if (c.dot(pm) <= fs.budget) {
      hi = mid;
      p_hi = std::move(pm);
    } else {
      lo = mid;
    }
  }
  return p_hi;
}

}  // namespace treesel
