#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"

namespace treesel {

// Sensors carry 1-based ids (1..m); id 0 is the fusion center. Per-sensor
// vectors (costs, marginal probabilities, noise variances) are stored
// 0-based, so sensor i lives at position i - 1.

/// The linear time-invariant model x_{k+1} = A x_k + w_k, y_k = C x_k + v_k
/// with w ~ N(0, Q), v ~ N(0, diag(r)) and x_0 ~ N(0, Sigma0).
struct LinearSystem {
  Matrix A;
  Matrix Q;
  Matrix C;  // row i-1 is the observation row of sensor i
  Vector r;
  Matrix Sigma0;

  Eigen::Index n() const noexcept { return A.rows(); }
  Eigen::Index m() const noexcept { return C.rows(); }

  /// C_i^T C_i / r_i for sensor id i.
  Matrix information(std::size_t sensor) const {
    const RowVector row = C.row(static_cast<Eigen::Index>(sensor - 1));
    return row.transpose() * row / r(static_cast<Eigen::Index>(sensor - 1));
  }
};

/// Throws DimensionMismatch / NonPositiveNoise / NotPositiveDefinite /
/// NotObservable naming the first violated invariant.
inline void validate_system(const LinearSystem& sys) {
  const Eigen::Index n = sys.A.rows();
  if (n == 0 || sys.A.cols() != n) throw Error(ErrorKind::DimensionMismatch, "A must be square and non-empty");
  if (sys.Q.rows() != n || sys.Q.cols() != n) throw Error(ErrorKind::DimensionMismatch, "Q must be n x n");
  if (sys.Sigma0.rows() != n || sys.Sigma0.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "Sigma0 must be n x n");
  if (sys.C.cols() != n) throw Error(ErrorKind::DimensionMismatch, "C must have n columns");
  if (sys.r.size() != sys.C.rows()) throw Error(ErrorKind::DimensionMismatch, "r must have one entry per sensor");
  if (!sys.A.allFinite() || !sys.Q.allFinite() || !sys.C.allFinite() || !sys.r.allFinite() ||
      !sys.Sigma0.allFinite())
    throw Error(ErrorKind::DimensionMismatch, "model contains non-finite entries");
  for (Eigen::Index i = 0; i < sys.r.size(); ++i) {
    if (!(sys.r(i) > 0.0))
      throw Error(ErrorKind::NonPositiveNoise, "r_" + std::to_string(i + 1) + " must be > 0");
  }
  if (!is_symmetric(sys.Q) || min_eigenvalue(sys.Q) <= 0.0)
    throw Error(ErrorKind::NonPositiveNoise, "Q must be symmetric positive definite");
  if (!is_symmetric(sys.Sigma0) || min_eigenvalue(sys.Sigma0) <= 0.0)
    throw Error(ErrorKind::NotPositiveDefinite, "Sigma0 must be symmetric positive definite");
  if (!is_observable(sys.A, sys.C, 1e-10)) throw Error(ErrorKind::NotObservable, "(C, A) is not observable");
}

/// A set of sensor ids. Members are kept sorted and unique.
class SubTree {
 public:
  SubTree() = default;
  explicit SubTree(std::vector<std::size_t> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  const std::vector<std::size_t>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(std::size_t id) const { return std::binary_search(members_.begin(), members_.end(), id); }

  std::string to_string() const {
    std::string out;
    for (std::size_t k = 0; k < members_.size(); ++k) {
      if (k) out += ' ';
      out += std::to_string(members_[k]);
    }
    return out;
  }

  friend bool operator==(const SubTree&, const SubTree&) = default;
  friend auto operator<=>(const SubTree& a, const SubTree& b) { return a.members_ <=> b.members_; }

 private:
  std::vector<std::size_t> members_;
};

/// Rooted communication tree. parent(i) is the unique out-neighbour of sensor
/// i (0 means the fusion center) and cost(i) the energy of that edge.
class SensorTree {
 public:
  SensorTree() = default;

  SensorTree(std::vector<std::size_t> parent, std::vector<double> cost)
      : parent_(std::move(parent)), cost_(std::move(cost)) {
    const std::size_t m = parent_.size();
    if (cost_.size() != m) throw Error(ErrorKind::DimensionMismatch, "parent and cost lengths differ");
    for (std::size_t i = 0; i < m; ++i) {
      if (parent_[i] > m || parent_[i] == i + 1)
        throw Error(ErrorKind::InvalidTree, "sensor " + std::to_string(i + 1) + " has an invalid parent");
      if (!(cost_[i] > 0.0) || !std::isfinite(cost_[i]))
        throw Error(ErrorKind::InvalidTree, "cost of sensor " + std::to_string(i + 1) + " must be positive");
    }
    children_.assign(m + 1, {});
    for (std::size_t i = 1; i <= m; ++i) children_[parent_[i - 1]].push_back(i);
    depth_.assign(m + 1, 0);
    // Breadth-first from the fusion center; unreached sensors sit on a cycle.
    topo_.clear();
    std::vector<std::size_t> frontier{0};
    std::vector<bool> seen(m + 1, false);
    seen[0] = true;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::size_t v = frontier[head];
      for (std::size_t c : children_[v]) {
        seen[c] = true;
        depth_[c] = depth_[v] + 1;
        frontier.push_back(c);
        topo_.push_back(c);
      }
    }
    if (topo_.size() != m) throw Error(ErrorKind::InvalidTree, "parent links contain a cycle");
  }

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t parent(std::size_t id) const { return parent_.at(id - 1); }
  double cost(std::size_t id) const { return cost_.at(id - 1); }
  const std::vector<std::size_t>& parents() const noexcept { return parent_; }
  const std::vector<double>& costs() const noexcept { return cost_; }
  /// Children of node v (v = 0 gives the fusion center's children), ascending ids.
  const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
  std::size_t depth(std::size_t id) const { return depth_.at(id); }
  /// Sensors in breadth-first order from the fusion center: parents first.
  const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }
  bool is_leaf(std::size_t id) const { return children_.at(id).empty(); }

  double total_cost() const { return std::accumulate(cost_.begin(), cost_.end(), 0.0); }

  bool is_ancestor(std::size_t ancestor, std::size_t id) const {
    for (std::size_t v = parent(id); v != 0; v = parent(v)) {
      if (v == ancestor) return true;
    }
    return ancestor == 0;
  }

  SubTree full() const {
    std::vector<std::size_t> all(size());
    std::iota(all.begin(), all.end(), std::size_t{1});
    return SubTree(std::move(all));
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<double> cost_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> topo_;
};

inline bool is_valid_subtree(const SensorTree& tree, const SubTree& t) {
  for (std::size_t id : t.members()) {
    if (id == 0 || id > tree.size()) return false;
    const std::size_t parent = tree.parent(id);
    if (parent != 0 && !t.contains(parent)) return false;
  }
  return true;
}

inline double tree_energy(const SensorTree& tree, const SubTree& t) {
  if (!is_valid_subtree(tree, t))
    throw Error(ErrorKind::InvalidSubtree, "{" + t.to_string() + "} is not closed under parent");
  double energy = 0.0;
  for (std::size_t id : t.members()) energy += tree.cost(id);
  return energy;
}

/// Per-sensor selection probabilities, p(i - 1) for sensor i.
using MarginalSchedule = Vector;

inline bool in_unit_box(const MarginalSchedule& p) {
  return ((p.array() >= 0.0) && (p.array() <= 1.0)).all();
}

/// Distribution over transmission subtrees.
struct TreeDistribution {
  struct Entry {
    SubTree tree;
    double probability = 0.0;
  };
  std::vector<Entry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.probability;
    return s;
  }
};

inline void validate_distribution(const SensorTree& tree, const TreeDistribution& dist) {
  if (dist.entries.empty()) throw Error(ErrorKind::InvalidDistribution, "distribution is empty");
  for (const auto& e : dist.entries) {
    if (!(e.probability >= 0.0)) throw Error(ErrorKind::InvalidDistribution, "negative probability");
    if (!is_valid_subtree(tree, e.tree))
      throw Error(ErrorKind::InvalidSubtree, "{" + e.tree.to_string() + "} is not a valid subtree");
  }
  if (std::abs(dist.total() - 1.0) > 1e-12)
    throw Error(ErrorKind::InvalidDistribution, "probabilities must sum to one");
}

/// Sum over members of C_i^T C_i / r_i.
inline Matrix information_matrix(const LinearSystem& sys, const SubTree& t) {
  Matrix info = Matrix::Zero(sys.n(), sys.n());
  for (std::size_t id : t.members()) info += sys.information(id);
  return info;
}

/// Sum of p_i C_i^T C_i / r_i.
inline Matrix information_matrix(const LinearSystem& sys, const MarginalSchedule& p) {
  if (p.size() != sys.m()) throw Error(ErrorKind::DimensionMismatch, "schedule length differs from sensor count");
  const Vector weights = p.array() / sys.r.array();
  return sys.C.transpose() * weights.asDiagonal() * sys.C;
}

/// Stacked rows of the members of t (the matrix C_T).
inline Matrix stacked_rows(const LinearSystem& sys, const SubTree& t) {
  Matrix rows(static_cast<Eigen::Index>(t.size()), sys.n());
  Eigen::Index k = 0;
  for (std::size_t id : t.members()) rows.row(k++) = sys.C.row(static_cast<Eigen::Index>(id - 1));
  return rows;
}

}  // namespace treesel
