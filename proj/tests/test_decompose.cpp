#include <gtest/gtest.h>

#include "support.hpp"

using namespace treesel;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

/// Sum of the masses of the trees that contain sensor id, added up naively.
double mass_containing(const TreeDistribution& d, std::size_t id) {
  double s = 0.0;
  for (const auto& e : d.entries)
    for (std::size_t member : e.tree.members())
      if (member == id) s += e.probability;
  return s;
}

bool nested(const TreeDistribution& d) {
  for (std::size_t j = 1; j < d.size(); ++j) {
    const auto& small = d.entries[j - 1].tree.members();
    const auto& big = d.entries[j].tree.members();
    if (!std::includes(big.begin(), big.end(), small.begin(), small.end()) || small.size() >= big.size())
      return false;
  }
  return true;
}

}  // namespace

TEST(Decompose, ChainWithTieDropsZeroMassLevel) {
  const SensorTree t = fixtures::chain(3);
  const Vector p = vec({0.8, 0.5, 0.5});
  const auto d = decompose(t, p);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.entries[0].tree, SubTree{});
  EXPECT_NEAR(d.entries[0].probability, 0.2, 1e-15);
  EXPECT_EQ(d.entries[1].tree, SubTree({1}));
  EXPECT_NEAR(d.entries[1].probability, 0.3, 1e-15);
  EXPECT_EQ(d.entries[2].tree, SubTree({1, 2, 3}));
  EXPECT_NEAR(d.entries[2].probability, 0.5, 1e-15);
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_NEAR(mass_containing(d, i), p(static_cast<Eigen::Index>(i - 1)), 1e-15);
}

TEST(Decompose, AllOnesIsTheFullTree) {
  const auto d = decompose(fixtures::chain(4), Vector::Ones(4));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.entries[0].tree, SubTree({1, 2, 3, 4}));
  EXPECT_EQ(d.entries[0].probability, 1.0);
}

TEST(Decompose, ZeroIsTheEmptyTree) {
  const auto d = decompose(fixtures::star({1, 2, 3}), Vector::Zero(3));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_TRUE(d.entries[0].tree.empty());
  EXPECT_EQ(d.entries[0].probability, 1.0);
}

TEST(Decompose, TiesKeepParentsAheadOfLowerNumberedChildren) {
  // 2 is the parent of 1; both share the same probability.
  const SensorTree t({2, 0, 2}, {1, 1, 1});
  const auto d = decompose(t, vec({0.5, 0.5, 0.5}));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.entries[1].tree, SubTree({1, 2, 3}));
  const auto d2 = decompose(t, vec({0.4, 0.5, 0.4}));
  for (const auto& e : d2.entries) EXPECT_TRUE(is_valid_subtree(t, e.tree));
}

TEST(Decompose, RejectsInfeasibleSchedules) {
  const SensorTree t = fixtures::chain(2);
  for (const Vector& p : {vec({0.5, 0.8}), vec({1.2, 0.1}), vec({0.5, -0.1})}) {
    try {
      decompose(t, p);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::OrderingViolated);
    }
  }
}

TEST(Decompose, RandomSchedulesRoundTripWithNestedValidSupport) {
  SplitMix64 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const SensorTree t = fixtures::random_tree(rng, 10);
    Vector p = fixtures::random_ordered_schedule(rng, t);
    // Force some ties so the tie-breaking path is exercised.
    if (trial % 3 == 0)
      for (std::size_t i = 1; i <= 10; ++i)
        if (t.parent(i) != 0 && rng.uniform() < 0.4) p(static_cast<Eigen::Index>(i - 1)) = p(t.parent(i) - 1);
    const auto d = decompose(t, p);
    EXPECT_NO_THROW(validate_distribution(t, d));
    EXPECT_LE(d.size(), 11u);
    EXPECT_TRUE(nested(d));
    for (const auto& e : d.entries) EXPECT_GT(e.probability, 0.0);
    EXPECT_LE((marginals_of(d, 10) - p).cwiseAbs().maxCoeff(), 1e-12);
    double energy = 0.0;
    for (const auto& e : d.entries) energy += e.probability * tree_energy(t, e.tree);
    EXPECT_NEAR(energy, expected_energy(t, p), 1e-12);
  }
}

TEST(MarginalsOf, Examples) {
  TreeDistribution full;
  full.entries = {{SubTree({1, 2, 3}), 1.0}};
  EXPECT_EQ(marginals_of(full, 3), Vector::Ones(3));
  TreeDistribution half;
  half.entries = {{SubTree{}, 0.5}, {SubTree({1}), 0.5}};
  EXPECT_EQ(marginals_of(half, 3), vec({0.5, 0.0, 0.0}));
  TreeDistribution bad;
  bad.entries = {{SubTree({4}), 1.0}};
  EXPECT_THROW(marginals_of(bad, 3), Error);
}
