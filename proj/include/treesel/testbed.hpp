#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "treesel/error.hpp"
#include "treesel/linalg.hpp"
#include "treesel/model.hpp"
#include "treesel/rng.hpp"

namespace treesel {

/// Heat equation u_t = alpha * laplacian(u) on [0, l]^2, explicit finite
/// differences on an (l/h + 1)^2 grid with reflecting walls. Sensors are
/// scattered uniformly; the fusion center sits at the origin.
struct DiffusionConfig {
  double side_length = 3.0;
  double alpha = 0.1;
  double grid_spacing = 1.0;
  double time_step = 1.0;
  std::size_t sensor_count = 16;
  double process_noise = 1.0;      ///< Q = q I
  double measurement_noise = 1.0;  ///< r_i
  double initial_variance = 4.0;   ///< Sigma0 = sigma0 I
  double budget = 6.0;
  double cost_offset = 1.0;        ///< edge cost c + d^2
  std::uint64_t seed = 0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline std::size_t grid_points_per_axis(const DiffusionConfig& cfg) {
  if (!(cfg.grid_spacing > 0.0) || !(cfg.side_length > 0.0))
    throw Error(ErrorKind::InvalidArgument, "side length and grid spacing must be positive");
  const double cells = cfg.side_length / cfg.grid_spacing;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) || rounded < 1.0)
    throw Error(ErrorKind::UnstableDiscretization, "side length must be an integer multiple of the grid spacing");
  return static_cast<std::size_t>(rounded) + 1;
}

inline void validate_config(const DiffusionConfig& cfg) {
  grid_points_per_axis(cfg);
  if (cfg.alpha < 0.0 || !(cfg.time_step > 0.0))
    throw Error(ErrorKind::InvalidArgument, "diffusion speed must be >= 0 and the time step > 0");
  const double courant = cfg.alpha * cfg.time_step / (cfg.grid_spacing * cfg.grid_spacing);
  if (courant > 0.25)
    throw Error(ErrorKind::UnstableDiscretization, "alpha * dt / h^2 = " + std::to_string(courant) + " exceeds 0.25");
  if (!(cfg.process_noise > 0.0) || !(cfg.measurement_noise > 0.0) || !(cfg.initial_variance > 0.0))
    throw Error(ErrorKind::NonPositiveNoise, "noise scales must be positive");
  if (!(cfg.cost_offset > 0.0)) throw Error(ErrorKind::InvalidArgument, "cost offset must be positive");
  if (!(cfg.budget >= 0.0)) throw Error(ErrorKind::InvalidArgument, "budget must be >= 0");
}

/// Grid point (i, j) at (i h, j h) is state i * N + j.
inline std::size_t grid_index(std::size_t i, std::size_t j, std::size_t per_axis) { return i * per_axis + j; }

/// A, Q and Sigma0 of the discretized field; C and r are left empty.
inline LinearSystem build_dynamics(const DiffusionConfig& cfg) {
  validate_config(cfg);
  const std::size_t N = grid_points_per_axis(cfg);
  const auto n = static_cast<Eigen::Index>(N * N);
  const double coupling = cfg.alpha * cfg.time_step / (cfg.grid_spacing * cfg.grid_spacing);
  Matrix lap = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      const auto k = static_cast<Eigen::Index>(grid_index(i, j, N));
      auto link = [&](std::size_t ni, std::size_t nj) {
        const auto l = static_cast<Eigen::Index>(grid_index(ni, nj, N));
        lap(k, l) += 1.0;
        lap(k, k) -= 1.0;
      };
      // Missing neighbours are mirrored onto the node itself, which leaves no term.
      if (i > 0) link(i - 1, j);
      if (i + 1 < N) link(i + 1, j);
      if (j > 0) link(i, j - 1);
      if (j + 1 < N) link(i, j + 1);
    }
  }
  LinearSystem sys;
  sys.A = Matrix::Identity(n, n) + coupling * lap;
  sys.Q = cfg.process_noise * Matrix::Identity(n, n);
  sys.Sigma0 = cfg.initial_variance * Matrix::Identity(n, n);
  sys.C = Matrix::Zero(0, n);
  sys.r = Vector::Zero(0);
  return sys;
}

/// Bilinear interpolation rows divided by h^2. A sensor on the far edge is
/// assigned to the last cell.
inline Matrix build_observation(const DiffusionConfig& cfg, const std::vector<Point>& positions) {
  const std::size_t N = grid_points_per_axis(cfg);
  const double h = cfg.grid_spacing;
  const double l = cfg.side_length;
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(positions.size()), static_cast<Eigen::Index>(N * N));
  for (std::size_t s = 0; s < positions.size(); ++s) {
    const Point& pt = positions[s];
    if (!(pt.x >= 0.0 && pt.x <= l && pt.y >= 0.0 && pt.y <= l))
      throw Error(ErrorKind::OutOfRegion, "sensor " + std::to_string(s + 1) + " lies outside the region");
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pt.x / h)), N - 2);
    const auto j = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pt.y / h)), N - 2);
    const double dx = pt.x / h - static_cast<double>(i);
    const double dy = pt.y / h - static_cast<double>(j);
    const auto row = static_cast<Eigen::Index>(s);
    const double scale = 1.0 / (h * h);
    auto put = [&](std::size_t gi, std::size_t gj, double w) {
      c(row, static_cast<Eigen::Index>(grid_index(gi, gj, N))) += w * scale;
    };
    put(i, j, (1.0 - dx) * (1.0 - dy));
    put(i + 1, j, dx * (1.0 - dy));
    put(i, j + 1, (1.0 - dx) * dy);
    put(i + 1, j + 1, dx * dy);
  }
  return c;
}

/// Prim's algorithm on the complete graph over the fusion center (origin)
/// and the sensors with weight c + d^2; edges point toward the origin.
inline SensorTree build_topology(const DiffusionConfig& cfg, const std::vector<Point>& positions) {
  const std::size_t m = positions.size();
  std::vector<Point> nodes;
  nodes.reserve(m + 1);
  nodes.push_back({0.0, 0.0});
  nodes.insert(nodes.end(), positions.begin(), positions.end());
  auto weight = [&](std::size_t a, std::size_t b) {
    const double dx = nodes[a].x - nodes[b].x;
    const double dy = nodes[a].y - nodes[b].y;
    return cfg.cost_offset + dx * dx + dy * dy;
  };
  std::vector<bool> in_tree(m + 1, false);
  std::vector<double> best(m + 1, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> link(m + 1, 0);
  std::vector<std::size_t> parent(m, 0);
  std::vector<double> cost(m, 0.0);
  best[0] = 0.0;
  for (std::size_t added = 0; added <= m; ++added) {
    std::size_t u = m + 1;
    for (std::size_t v = 0; v <= m; ++v) {
      if (!in_tree[v] && (u == m + 1 || best[v] < best[u])) u = v;
    }
    in_tree[u] = true;
    if (u != 0) {
      parent[u - 1] = link[u];
      cost[u - 1] = best[u];
    }
    for (std::size_t v = 0; v <= m; ++v) {
      if (in_tree[v]) continue;
      const double w = weight(u, v);
      if (w < best[v]) {
        best[v] = w;
        link[v] = u;
      }
    }
  }
  return SensorTree(std::move(parent), std::move(cost));
}

/// Uniform placements in [0, l]^2 from the stream seeded with `seed`.
inline std::vector<Point> random_positions(const DiffusionConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Point> pts(cfg.sensor_count);
  for (auto& p : pts) {
    p.x = rng.uniform() * cfg.side_length;
    p.y = rng.uniform() * cfg.side_length;
  }
  return pts;
}

struct DiffusionInstance {
  LinearSystem system;
  SensorTree tree;
  std::vector<Point> positions;
  double budget = 0.0;
  std::size_t placement_attempts = 0;  ///< draws needed to get an observable placement
};

inline DiffusionInstance assemble_instance(const DiffusionConfig& cfg, std::vector<Point> positions) {
  DiffusionInstance inst;
  inst.system = build_dynamics(cfg);
  inst.system.C = build_observation(cfg, positions);
  inst.system.r = Vector::Constant(static_cast<Eigen::Index>(positions.size()), cfg.measurement_noise);
  inst.tree = build_topology(cfg, positions);
  inst.positions = std::move(positions);
  inst.budget = cfg.budget;
  return inst;
}

/// Placement attempt a draws from derive_seed(cfg.seed, a); the first
/// observable one is kept.
inline DiffusionInstance generate_instance(const DiffusionConfig& cfg, std::size_t max_attempts = 1000) {
  validate_config(cfg);
  for (std::size_t a = 0; a < max_attempts; ++a) {
    DiffusionInstance inst = assemble_instance(cfg, random_positions(cfg, derive_seed(cfg.seed, a)));
    if (!is_observable(inst.system.A, inst.system.C, 1e-10)) continue;
    validate_system(inst.system);
    inst.placement_attempts = a + 1;
    return inst;
  }
  throw Error(ErrorKind::NotObservable, "no observable placement found");
}

}  // namespace treesel
