#pragma once

// Small instance builders shared by the unit tests.

#include <cstdint>
#include <vector>

#include "treesel/treesel.hpp"

namespace fixtures {

using treesel::LinearSystem;
using treesel::Matrix;
using treesel::SensorTree;
using treesel::Vector;

/// x_{k+1} = x_k + w, y = x + v with unit variances and P_0 = 1.
inline LinearSystem scalar_system() {
  LinearSystem s;
  s.A = Matrix::Identity(1, 1);
  s.Q = Matrix::Identity(1, 1);
  s.C = Matrix::Identity(1, 1);
  s.r = Vector::Ones(1);
  s.Sigma0 = Matrix::Identity(1, 1);
  return s;
}

inline SensorTree single_sensor() { return SensorTree({0}, {1.0}); }

/// Chain 0 <- 1 <- 2 <- ... <- m.
inline SensorTree chain(std::size_t m, double cost = 1.0) {
  std::vector<std::size_t> parent(m);
  for (std::size_t i = 0; i < m; ++i) parent[i] = i;
  return SensorTree(parent, std::vector<double>(m, cost));
}

inline SensorTree star(std::vector<double> cost) {
  std::vector<std::size_t> parent(cost.size(), 0);
  return SensorTree(std::move(parent), std::move(cost));
}

/// Uniform double in [lo, hi) from a splitmix64 stream.
inline double uniform(treesel::SplitMix64& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * rng.uniform();
}

inline Matrix random_matrix(treesel::SplitMix64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

/// Random SPD matrix B B' + floor I.
inline Matrix random_spd(treesel::SplitMix64& rng, Eigen::Index n, double floor = 0.1, double scale = 1.0) {
  const Matrix b = random_matrix(rng, n, n, scale);
  return b * b.transpose() + floor * Matrix::Identity(n, n);
}

/// Random PSD matrix of rank <= r.
inline Matrix random_psd(treesel::SplitMix64& rng, Eigen::Index n, Eigen::Index rank, double scale = 1.0) {
  const Matrix b = random_matrix(rng, n, rank, scale);
  return b * b.transpose();
}

/// Random tree: parent(i) drawn uniformly from {0, ..., i - 1}.
inline SensorTree random_tree(treesel::SplitMix64& rng, std::size_t m, double cost_lo = 0.5, double cost_hi = 2.0) {
  std::vector<std::size_t> parent(m);
  std::vector<double> cost(m);
  for (std::size_t i = 0; i < m; ++i) {
    parent[i] = static_cast<std::size_t>(rng.next() % (i + 1));
    cost[i] = uniform(rng, cost_lo, cost_hi);
  }
  return SensorTree(parent, cost);
}

/// Random observable system with m sensors; A scaled to spectral radius rho.
inline LinearSystem random_system(treesel::SplitMix64& rng, Eigen::Index n, Eigen::Index m, double rho = 1.05) {
  for (;;) {
    LinearSystem s;
    Matrix a = random_matrix(rng, n, n);
    Eigen::EigenSolver<Matrix> es(a, false);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    s.A = radius > 0.0 ? Matrix(a * (rho / radius)) : Matrix::Identity(n, n);
    s.Q = random_spd(rng, n, 0.2, 0.5);
    s.C = random_matrix(rng, m, n);
    s.r = Vector(m);
    for (Eigen::Index i = 0; i < m; ++i) s.r(i) = uniform(rng, 0.5, 2.0);
    s.Sigma0 = random_spd(rng, n, 0.5);
    if (treesel::is_observable(s.A, s.C)) return s;
  }
}

/// Random p satisfying box and ordering: each child takes a random fraction
/// of its parent's value.
inline Vector random_ordered_schedule(treesel::SplitMix64& rng, const SensorTree& tree) {
  Vector p(static_cast<Eigen::Index>(tree.size()));
  for (std::size_t id : tree.topological_order()) {
    const std::size_t parent = tree.parent(id);
    const double cap = parent == 0 ? 1.0 : p(static_cast<Eigen::Index>(parent - 1));
    p(static_cast<Eigen::Index>(id - 1)) = cap * rng.uniform();
  }
  return p;
}

/// Scale an ordered schedule down until it fits the budget.
inline Vector fit_budget(const SensorTree& tree, Vector p, double budget) {
  const double e = treesel::expected_energy(tree, p);
  if (e > budget) p *= budget / e;
  return p;
}

}  // namespace fixtures
