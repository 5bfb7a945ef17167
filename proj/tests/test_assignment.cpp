#include <set>

#include <gtest/gtest.h>

#include "mcmot/assignment.hpp"
#include "mcmot/error.hpp"
#include "support.hpp"

using namespace mcmot;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

void expect_valid(const Matching& m, std::size_t rows, std::size_t cols) {
  std::set<std::size_t> rs, cs;
  for (auto [r, c] : m.pairs) {
    EXPECT_TRUE(rs.insert(r).second) << "row " << r << " used twice";
    EXPECT_TRUE(cs.insert(c).second) << "col " << c << " used twice";
  }
  for (auto r : m.unmatched_rows) EXPECT_TRUE(rs.insert(r).second);
  for (auto c : m.unmatched_cols) EXPECT_TRUE(cs.insert(c).second);
  EXPECT_EQ(rs.size(), rows);
  EXPECT_EQ(cs.size(), cols);
}

CostMatrix random_matrix(sim::SplitMix64& rng, std::size_t r, std::size_t c, double infeasible_prob) {
  CostMatrix m(r, c);
  for (double& v : m.data()) v = rng.uniform() < infeasible_prob ? kInfeasible : static_cast<double>(rng.next() % 50);
  return m;
}

}  // namespace

TEST(SolveAssignment, SingleCell) {
  const Matching m = solve_assignment(CostMatrix{{0.0}});
  EXPECT_EQ(m.pairs, (Pairs{{0, 0}}));
  EXPECT_EQ(total_cost(CostMatrix{{0.0}}, m), 0.0);
}

TEST(SolveAssignment, DiagonalIsCheaper) {
  const CostMatrix c{{1, 2}, {2, 1}};
  const Matching m = solve_assignment(c);
  EXPECT_EQ(m.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_EQ(total_cost(c, m), 2.0);
}

TEST(SolveAssignment, AntiDiagonalIsCheaper) {
  const CostMatrix c{{4, 1}, {1, 4}};
  const Matching m = solve_assignment(c);
  EXPECT_EQ(m.pairs, (Pairs{{0, 1}, {1, 0}}));
  EXPECT_EQ(total_cost(c, m), 2.0);
}

TEST(SolveAssignment, EmptyMatrix) {
  const Matching m = solve_assignment(CostMatrix(0, 3));
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_EQ(m.unmatched_cols.size(), 3u);
}

TEST(SolveAssignment, AllInfeasibleLeavesEverythingUnmatched) {
  const Matching m = solve_assignment(CostMatrix(3, 2, kInfeasible));
  EXPECT_TRUE(m.pairs.empty());
  expect_valid(m, 3, 2);
}

TEST(SolveAssignment, PrefersMorePairsOverLowerCost) {
  // Taking (0,0) alone costs 0 but blocks row 1; two pairs cost 200.
  const CostMatrix c{{0, 100}, {100, kInfeasible}};
  const Matching m = solve_assignment(c);
  EXPECT_EQ(m.pairs, (Pairs{{0, 1}, {1, 0}}));
}

TEST(SolveAssignment, RectangularBothWays) {
  const CostMatrix wide{{5, 1, 9}, {2, 8, 3}};
  EXPECT_EQ(solve_assignment(wide).pairs, (Pairs{{0, 1}, {1, 0}}));
  const CostMatrix tall{{5, 2}, {1, 8}, {9, 3}};
  const Matching m = solve_assignment(tall);
  // 2 + 1 beats 1 + 3.
  EXPECT_EQ(m.pairs, (Pairs{{0, 1}, {1, 0}}));
  EXPECT_EQ(m.unmatched_rows, (std::vector<std::size_t>{2}));
}

TEST(SolveAssignment, MatchesBruteForce) {
  sim::SplitMix64 rng(21);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t r = 1 + rng.next() % 6, c = 1 + rng.next() % 6;
    const CostMatrix m = random_matrix(rng, r, c, k % 2 ? 0.3 : 0.0);
    const Matching got = solve_assignment(m);
    expect_valid(got, r, c);
    const auto [pairs, cost] = oracle::brute_force_assignment(m);
    ASSERT_EQ(got.pairs.size(), pairs) << "case " << k;
    ASSERT_EQ(total_cost(m, got), cost) << "case " << k;
    for (auto [i, j] : got.pairs) EXPECT_FALSE(is_infeasible(m(i, j)));
  }
}

TEST(SolveAssignment, InvariantUnderPositiveScaling) {
  sim::SplitMix64 rng(22);
  for (int k = 0; k < 300; ++k) {
    const std::size_t r = 1 + rng.next() % 6, c = 1 + rng.next() % 6;
    const CostMatrix m = random_matrix(rng, r, c, 0.2);
    CostMatrix scaled = m;
    for (double& v : scaled.data()) {
      if (!is_infeasible(v)) v *= 4.0;  // power of two keeps ties exact
    }
    EXPECT_EQ(solve_assignment(m).pairs, solve_assignment(scaled).pairs);
  }
}

TEST(SolveAssignment, Deterministic) {
  sim::SplitMix64 rng(23);
  const CostMatrix m = random_matrix(rng, 6, 5, 0.1);
  const Matching a = solve_assignment(m), b = solve_assignment(m);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.unmatched_rows, b.unmatched_rows);
}

TEST(Gate, AllTrueIsIdentity) {
  const CostMatrix c{{1, 2}, {2, 1}};
  EXPECT_EQ(gate(c, FeasibilityMask(2, 2, 1)), c);
}

TEST(Gate, AllFalseBlocksEverything) {
  const CostMatrix g = gate(CostMatrix{{1, 2}, {2, 1}}, FeasibilityMask(2, 2, 0));
  for (double v : g.data()) EXPECT_TRUE(is_infeasible(v));
  EXPECT_TRUE(solve_assignment(g).pairs.empty());
}

TEST(Gate, BlockedCellForcesOtherDiagonal) {
  FeasibilityMask mask(2, 2, 1);
  mask(0, 0) = 0;
  const CostMatrix c{{1, 2}, {2, 1}};
  const Matching m = solve_assignment(gate(c, mask));
  EXPECT_EQ(m.pairs, (Pairs{{0, 1}, {1, 0}}));
  EXPECT_EQ(total_cost(c, m), 4.0);
}

TEST(Gate, ShapeMismatchIsDomainError) {
  EXPECT_THROW(gate(CostMatrix(2, 2), FeasibilityMask(2, 3, 1)), Error);
}

TEST(MatchingCascade, RecentTrackWinsTies) {
  const std::vector<int> tsu{3, 1};
  auto cost = [](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    return CostMatrix(rows.size(), cols.size(), 0.1);
  };
  const Matching m = matching_cascade(cost, tsu, 1, 30, 0.5);
  EXPECT_EQ(m.pairs, (Pairs{{1, 0}}));
  EXPECT_EQ(m.unmatched_rows, (std::vector<std::size_t>{0}));
}

TEST(MatchingCascade, NoDetections) {
  const std::vector<int> tsu{1, 2, 5};
  auto cost = [](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    return CostMatrix(rows.size(), cols.size(), 0.0);
  };
  const Matching m = matching_cascade(cost, tsu, 0, 30, 0.5);
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_EQ(m.unmatched_rows.size(), 3u);
}

TEST(MatchingCascade, ThresholdAndDepthRespected) {
  const std::vector<int> tsu{1, 2, 40};
  // Row r costs r*0.3 to every column.
  auto cost = [](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    CostMatrix c(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) c(i, j) = 0.3 * static_cast<double>(rows[i]);
    }
    return c;
  };
  const Matching m = matching_cascade(cost, tsu, 3, 30, 0.5);
  EXPECT_EQ(m.pairs, (Pairs{{0, 0}, {1, 1}}));  // row 2 is beyond max depth
  expect_valid(m, 3, 3);
}

TEST(IouMatching, IdenticalBoxesMatchAtZeroCost) {
  const std::vector<BoundingBox> t{{0, 0, 10, 10}}, d{{0, 0, 10, 10}};
  EXPECT_EQ(iou_matching(t, d, 0.7).pairs, (Pairs{{0, 0}}));
  EXPECT_EQ(iou_cost(t, d)(0, 0), 0.0);
}

TEST(IouMatching, DisjointBoxesStayUnmatched) {
  const std::vector<BoundingBox> t{{0, 0, 10, 10}}, d{{50, 50, 10, 10}};
  const Matching m = iou_matching(t, d, 0.7);
  EXPECT_TRUE(m.pairs.empty());
  expect_valid(m, 1, 1);
}

TEST(IouMatching, MatchesBruteForce) {
  sim::SplitMix64 rng(24);
  for (int k = 0; k < 500; ++k) {
    std::vector<BoundingBox> t, d;
    for (int i = 0; i < 3; ++i) {
      t.push_back({rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(10, 40), rng.uniform(10, 40)});
      d.push_back({rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(10, 40), rng.uniform(10, 40)});
    }
    const Matching m = iou_matching(t, d, 0.7);
    expect_valid(m, 3, 3);
    CostMatrix c = iou_cost(t, d);
    for (double& v : c.data()) {
      if (v > 0.7) v = kInfeasible;
    }
    const auto [pairs, cost] = oracle::brute_force_assignment(c);
    ASSERT_EQ(m.pairs.size(), pairs);
    EXPECT_NEAR(total_cost(c, m), cost, 1e-12);
  }
}
