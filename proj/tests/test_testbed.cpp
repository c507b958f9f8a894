#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace treesel;

TEST(BuildDynamics, DefaultGridHasSixteenStatesAndTenthCoupling) {
  const DiffusionConfig cfg;
  const LinearSystem sys = build_dynamics(cfg);
  ASSERT_EQ(sys.n(), 16);
  EXPECT_DOUBLE_EQ(sys.A(grid_index(1, 1, 4), grid_index(1, 2, 4)), 0.1);
  EXPECT_DOUBLE_EQ(sys.A(grid_index(1, 1, 4), grid_index(2, 1, 4)), 0.1);
  EXPECT_DOUBLE_EQ(sys.A(grid_index(1, 1, 4), grid_index(2, 2, 4)), 0.0);
  EXPECT_NEAR(sys.A(grid_index(1, 1, 4), grid_index(1, 1, 4)), 0.6, 1e-15);
  EXPECT_NEAR(sys.A(grid_index(0, 0, 4), grid_index(0, 0, 4)), 0.8, 1e-15);
  EXPECT_EQ(sys.Q, Matrix::Identity(16, 16));
  EXPECT_EQ(sys.Sigma0, 4.0 * Matrix::Identity(16, 16));
}

TEST(BuildDynamics, ReflectingWallsConserveHeat) {
  DiffusionConfig cfg;
  cfg.side_length = 2.0;
  cfg.grid_spacing = 0.5;
  cfg.alpha = 0.05;
  const LinearSystem sys = build_dynamics(cfg);
  EXPECT_EQ(sys.n(), 25);
  EXPECT_LE((sys.A * Vector::Ones(25) - Vector::Ones(25)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(is_symmetric(sys.A));
}

TEST(BuildDynamics, NoDiffusionIsIdentity) {
  DiffusionConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_EQ(build_dynamics(cfg).A, Matrix::Identity(16, 16));
}

TEST(BuildDynamics, RejectsUnstableOrMisalignedGrids) {
  DiffusionConfig cfg;
  cfg.alpha = 0.3;
  try {
    build_dynamics(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnstableDiscretization);
  }
  cfg.alpha = 0.1;
  cfg.grid_spacing = 0.7;
  try {
    build_dynamics(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnstableDiscretization);
  }
}

TEST(BuildObservation, CellCentreSplitsEvenly) {
  const Matrix c = build_observation(DiffusionConfig{}, {{0.5, 0.5}});
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}})
    EXPECT_DOUBLE_EQ(c(0, grid_index(i, j, 4)), 0.25);
  EXPECT_EQ((c.array() != 0.0).count(), 4);
}

TEST(BuildObservation, GridPointIsSingleEntry) {
  const Matrix c = build_observation(DiffusionConfig{}, {{1.0, 1.0}, {3.0, 3.0}, {3.0, 0.0}});
  EXPECT_EQ(c(0, grid_index(1, 1, 4)), 1.0);
  EXPECT_EQ((c.row(0).array() != 0.0).count(), 1);
  EXPECT_EQ(c(1, grid_index(3, 3, 4)), 1.0);
  EXPECT_EQ(c(2, grid_index(3, 0, 4)), 1.0);
}

TEST(BuildObservation, RowsSumToInverseCellArea) {
  SplitMix64 rng(101);
  DiffusionConfig cfg;
  cfg.side_length = 2.0;
  cfg.grid_spacing = 0.5;
  cfg.alpha = 0.01;
  const auto pts = random_positions(cfg, 5);
  const Matrix c = build_observation(cfg, pts);
  for (Eigen::Index i = 0; i < c.rows(); ++i) EXPECT_NEAR(c.row(i).sum(), 4.0, 1e-12);
  const Matrix c1 = build_observation(DiffusionConfig{}, random_positions(DiffusionConfig{}, 6));
  for (Eigen::Index i = 0; i < c1.rows(); ++i) EXPECT_NEAR(c1.row(i).sum(), 1.0, 1e-12);
}

TEST(BuildObservation, OutsideRegionIsRejected) {
  try {
    build_observation(DiffusionConfig{}, {{3.5, 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfRegion);
  }
}

TEST(BuildTopology, TwoCollinearSensorsFormAChain) {
  const SensorTree t = build_topology(DiffusionConfig{}, {{1.0, 0.0}, {2.0, 0.0}});
  EXPECT_EQ(t.parent(1), 0u);
  EXPECT_EQ(t.parent(2), 1u);
  EXPECT_DOUBLE_EQ(t.cost(1), 2.0);
  EXPECT_DOUBLE_EQ(t.cost(2), 2.0);
}

TEST(BuildTopology, SingleSensorPaysOffsetPlusSquaredDistance) {
  const SensorTree t = build_topology(DiffusionConfig{}, {{1.5, 2.0}});
  EXPECT_DOUBLE_EQ(t.cost(1), 1.0 + 1.5 * 1.5 + 4.0);
}

TEST(BuildTopology, TotalWeightMatchesExhaustiveSpanningTrees) {
  SplitMix64 rng(102);
  DiffusionConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    cfg.sensor_count = 1 + rng.next() % 4;
    const auto pts = random_positions(cfg, rng.next());
    std::vector<Point> nodes{{0.0, 0.0}};
    nodes.insert(nodes.end(), pts.begin(), pts.end());
    std::vector<std::vector<double>> w(nodes.size(), std::vector<double>(nodes.size()));
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        const double dx = nodes[a].x - nodes[b].x, dy = nodes[a].y - nodes[b].y;
        w[a][b] = cfg.cost_offset + dx * dx + dy * dy;
      }
    const SensorTree t = build_topology(cfg, pts);
    EXPECT_NEAR(t.total_cost(), oracle::brute_force_mst_weight(w), 1e-12);
    for (std::size_t i = 1; i <= t.size(); ++i) EXPECT_DOUBLE_EQ(t.cost(i), w[i][t.parent(i)]);
  }
}

TEST(GenerateInstance, DefaultParameters) {
  DiffusionConfig cfg;
  cfg.seed = 17;
  const DiffusionInstance inst = generate_instance(cfg);
  EXPECT_EQ(inst.system.n(), 16);
  EXPECT_EQ(inst.system.m(), 16);
  EXPECT_EQ(inst.budget, 6.0);
  EXPECT_EQ(inst.system.r, Vector::Ones(16));
  EXPECT_EQ(inst.system.Q, Matrix::Identity(16, 16));
  EXPECT_EQ(inst.system.Sigma0, 4.0 * Matrix::Identity(16, 16));
  for (std::size_t i = 1; i <= 16; ++i) EXPECT_GT(inst.tree.cost(i), 1.0);
  EXPECT_NO_THROW(validate_system(inst.system));
  const DiffusionInstance again = generate_instance(cfg);
  EXPECT_EQ(again.system.C, inst.system.C);
  EXPECT_EQ(again.tree.parents(), inst.tree.parents());
}

TEST(GenerateInstance, MostPlacementsAreObservable) {
  const DiffusionConfig cfg;
  int observable = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto inst = assemble_instance(cfg, random_positions(cfg, derive_seed(1234, s)));
    if (is_observable(inst.system.A, inst.system.C)) ++observable;
  }
  EXPECT_GE(observable, 190);
}
