#include <gtest/gtest.h>

#include <queue>
#include <sstream>

#include "densemapf/grid.hpp"
#include "densemapf/plan.hpp"
#include "densemapf/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace densemapf;
using namespace testutil;

TEST(Neighbors, CornerOfEmptyMap) {
  const auto m = GridMap::empty(20, 20);
  EXPECT_EQ(m.neighbors({1, 1}), (std::vector<Vertex>{{2, 1}, {1, 2}}));
}

TEST(Neighbors, InteriorHasFourInFixedOrder) {
  const auto m = GridMap::empty(20, 20);
  EXPECT_EQ(m.neighbors({5, 5}), (std::vector<Vertex>{{6, 5}, {4, 5}, {5, 6}, {5, 4}}));
}

TEST(Neighbors, BlockedNeighborRemoved) {
  const auto m = map_from_rows({".@..", "....", "...."});
  EXPECT_EQ(m->neighbors({1, 1}), (std::vector<Vertex>{{1, 2}}));
}

TEST(Neighbors, InvalidVertexThrows) {
  const auto m = map_from_rows({".@..", "....", "...."});
  EXPECT_THROW(m->neighbors({2, 1}), InvalidVertex);
  EXPECT_THROW(m->neighbors({0, 1}), InvalidVertex);
  EXPECT_THROW(m->neighbors({5, 1}), InvalidVertex);
}

TEST(Neighbors, RelationIsSymmetric) {
  Rng rng(11);
  const auto m = random_obstacle_map(15, 12, 0.25, rng);
  for (VertexId v : m.free_vertices())
    for (const Vertex& w : m.neighbors(m.vertex(v))) {
      const auto back = m.neighbors(w);
      EXPECT_NE(std::find(back.begin(), back.end(), m.vertex(v)), back.end());
    }
}

TEST(MapIo, ParsesMovingAiFormat) {
  std::istringstream in("type octile\nheight 2\nwidth 3\nmap\n.@.\nT..\n");
  const auto m = parse_movingai_map(in, "x");
  EXPECT_EQ(m.width(), 3);
  EXPECT_EQ(m.height(), 2);
  EXPECT_EQ(m.free_count(), 4);
  EXPECT_FALSE(m.is_free(Vertex{2, 1}));
  EXPECT_FALSE(m.is_free(Vertex{1, 2}));
  std::ostringstream out;
  write_movingai_map(out, m);
  std::istringstream again(out.str());
  const auto m2 = parse_movingai_map(again);
  for (int j = 1; j <= 2; ++j)
    for (int i = 1; i <= 3; ++i) EXPECT_EQ(m.is_free(Vertex{i, j}), m2.is_free(Vertex{i, j}));
}

TEST(MapIo, ReportsLineOfError) {
  std::istringstream in("type octile\nheight 3\nwidth 3\nmap\n...\n..\n...\n");
  try {
    parse_movingai_map(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(MapIo, MissingMapSection) {
  std::istringstream in("type octile\nheight 3\nwidth 3\n");
  EXPECT_THROW(parse_movingai_map(in), ParseError);
}

TEST(Warehouse, Has360FreeVertices) {
  const auto m = warehouse_map();
  EXPECT_EQ(m.width(), 24);
  EXPECT_EQ(m.height(), 18);
  EXPECT_EQ(m.free_count(), 360);
  EXPECT_EQ(m.component_count(), 1);
}

TEST(DistanceOracle, MatchesFreshBfs) {
  Rng rng(5);
  for (int sample = 0; sample < 100; ++sample) {
    const int w = 5 + int(uniform_below(rng, 12)), h = 5 + int(uniform_below(rng, 12));
    auto map = std::make_shared<const GridMap>(random_obstacle_map(w, h, 0.2, rng));
    const DistanceOracle oracle(map);
    const auto& free = map->free_vertices();
    const VertexId src = free[uniform_below(rng, free.size())];
    std::vector<int> d(static_cast<std::size_t>(map->cell_count()), -1);
    std::queue<Vertex> q;
    q.push(map->vertex(src));
    d[static_cast<std::size_t>(src)] = 0;
    while (!q.empty()) {
      const Vertex u = q.front();
      q.pop();
      for (const Vertex& x : map->neighbors(u))
        if (d[static_cast<std::size_t>(map->id(x))] < 0) {
          d[static_cast<std::size_t>(map->id(x))] = d[static_cast<std::size_t>(map->id(u))] + 1;
          q.push(x);
        }
    }
    for (VertexId v : free) {
      const int expect = d[static_cast<std::size_t>(v)] < 0 ? DistanceOracle::kUnreachable : d[static_cast<std::size_t>(v)];
      ASSERT_EQ(oracle.dist(src, v), expect);
      ASSERT_EQ(oracle.dist(v, src), expect);
    }
  }
}

TEST(DistanceOracle, TriangleInequality) {
  Rng rng(9);
  auto map = std::make_shared<const GridMap>(random_obstacle_map(10, 10, 0.2, rng));
  const DistanceOracle o(map);
  const auto& f = map->free_vertices();
  for (int k = 0; k < 500; ++k) {
    const VertexId a = f[uniform_below(rng, f.size())], b = f[uniform_below(rng, f.size())],
                   c = f[uniform_below(rng, f.size())];
    EXPECT_EQ(o.dist(a, a), 0);
    EXPECT_LE(o.dist(a, c), o.dist(a, b) + o.dist(b, c));
  }
}

class PlanFixture : public ::testing::Test {
 protected:
  MapPtr map = empty_map(5, 5);
  VertexId v(int i, int j) const { return at_xy(*map, i, j); }
};

TEST_F(PlanFixture, SwapIsEdgeCollisionAtTimeOne) {
  const auto inst = make_instance(map, {v(1, 1), v(2, 1)}, {v(2, 1), v(1, 1)});
  const Plan plan{{v(1, 1), v(2, 1)}, {v(2, 1), v(1, 1)}};
  const auto report = validate_plan(*map, inst, plan);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::EdgeCollision);
  EXPECT_EQ(report[0].time, 1);
}

TEST_F(PlanFixture, FourCycleRotationIsClean) {
  // The rotation violates neither collision condition when enumerated pairwise.
  const std::vector<VertexId> ring{v(1, 1), v(2, 1), v(2, 2), v(1, 2)};
  Configuration s, g;
  Plan plan;
  for (int r = 0; r < 4; ++r) {
    s.push_back(ring[std::size_t(r)]);
    g.push_back(ring[std::size_t((r + 1) % 4)]);
    plan.push_back({s.back(), g.back()});
  }
  const auto inst = make_instance(map, s, g);
  EXPECT_TRUE(validate_plan(*map, inst, plan).empty());
  EXPECT_EQ(count_conflicts(plan), 0u);
}

TEST_F(PlanFixture, TeleportIsFeasibilityViolation) {
  const auto inst = make_instance(map, {v(1, 1)}, {v(3, 1)});
  const Plan plan{{v(1, 1), v(3, 1)}};
  const auto report = validate_plan(*map, inst, plan);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::Teleport);
}

TEST_F(PlanFixture, EndpointAndCountViolations) {
  const auto inst = make_instance(map, {v(1, 1)}, {v(2, 1)});
  EXPECT_EQ(validate_plan(*map, inst, Plan{}).front().kind, ViolationKind::RobotCount);
  EXPECT_EQ(validate_plan(*map, inst, Plan{{v(1, 2), v(2, 2), v(2, 1)}}).front().kind, ViolationKind::WrongStart);
  EXPECT_EQ(validate_plan(*map, inst, Plan{{v(1, 1)}}).front().kind, ViolationKind::WrongGoal);
  EXPECT_EQ(validate_plan(*map, inst, Plan{{}}).front().kind, ViolationKind::EmptyPath);
}

TEST_F(PlanFixture, ConflictCountingExamples) {
  EXPECT_EQ(count_conflicts({{v(1, 1), v(2, 1)}, {v(3, 3), v(3, 4)}}), 0u);
  EXPECT_FALSE(first_conflict({{v(1, 1), v(2, 1)}, {v(3, 3), v(3, 4)}}));

  // same vertex at t = 3 only
  const Plan meet{{v(1, 1), v(2, 1), v(3, 1), v(3, 2), v(3, 3)}, {v(5, 2), v(4, 2), v(4, 3), v(3, 2), v(2, 2)}};
  EXPECT_EQ(count_conflicts(meet), 1u);
  const auto c = first_conflict(meet);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->time, 3);
  EXPECT_EQ(c->kind, ConflictKind::Vertex);
  EXPECT_EQ(c->v, v(3, 2));

  // swap at t = 1, then both at (2,2) at t = 3: two (t, pair) conflicts
  const Plan both{{v(1, 1), v(2, 1), v(2, 2), v(2, 2)}, {v(2, 1), v(1, 1), v(1, 2), v(2, 2)}};
  EXPECT_EQ(count_conflicts(both), 2u);
  const auto f = first_conflict(both);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->time, 1);
  EXPECT_EQ(f->kind, ConflictKind::Edge);
}

TEST_F(PlanFixture, FirstConflictTieBreaksOnSmallestPair) {
  const Plan plan{{v(1, 1)}, {v(3, 1), v(3, 2)}, {v(2, 2), v(3, 2)}, {v(1, 2), v(1, 1)}};
  const auto c = first_conflict(plan);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->time, 1);
  EXPECT_EQ(c->a, 0);
  EXPECT_EQ(c->b, 3);
}

TEST_F(PlanFixture, ParkedRobotIsPermanentOccupant) {
  const Plan plan{{v(2, 1)}, {v(1, 1), v(1, 1), v(1, 1), v(2, 1), v(3, 1)}};
  EXPECT_EQ(count_conflicts(plan), 1u);
  EXPECT_EQ(first_conflict(plan)->time, 3);
}

TEST_F(PlanFixture, LowerBounds) {
  const DistanceOracle o(map);
  EXPECT_EQ(lower_bounds(o, make_instance(map, {v(1, 1), v(2, 2)}, {v(1, 1), v(2, 2)})).makespan, 0u);
  const auto one = lower_bounds(o, make_instance(map, {v(1, 1)}, {v(5, 4)}));
  EXPECT_EQ(one.makespan, 7u);
  EXPECT_EQ(one.soc, 7u);
  const auto two = lower_bounds(o, make_instance(map, {v(1, 1), v(1, 5)}, {v(3, 2), v(5, 4)}));
  EXPECT_EQ(two.makespan, 5u);
  EXPECT_EQ(two.soc, 8u);
}

TEST_F(PlanFixture, MetricsUseFinalSettleTime) {
  EXPECT_EQ(metrics({{v(1, 1), v(1, 1), v(1, 1)}}).soc, 0u);
  // leaves the goal and returns: settles at t = 4
  const Plan away{{v(2, 2), v(2, 3), v(3, 3), v(2, 3), v(2, 2), v(2, 2)}};
  EXPECT_EQ(arrival_time(away[0]), 4u);
  EXPECT_EQ(metrics(away).soc, 4u);
  EXPECT_EQ(metrics(away).makespan, 4u);
}

TEST(Metrics, DiagonalSwapOnTwoByTwo) {
  const auto map = empty_map(2, 2);
  const VertexId a = at_xy(*map, 1, 1), b = at_xy(*map, 2, 1), c = at_xy(*map, 2, 2), d = at_xy(*map, 1, 2);
  const auto ms = oracle::makespan(*map, {a, c}, {c, a});
  const auto soc = oracle::sum_of_costs(*map, {a, c}, {c, a});
  ASSERT_TRUE(ms && soc);
  EXPECT_EQ(*ms, 2);
  EXPECT_EQ(*soc, 4);
  const Plan rotate{{a, b, c}, {c, d, a}};
  const auto inst = make_instance(map, {a, c}, {c, a});
  EXPECT_TRUE(validate_plan(*map, inst, rotate).empty());
  const auto m = metrics(rotate);
  EXPECT_EQ(m.makespan, 2u);
  EXPECT_EQ(m.soc, 4u);
}

TEST(CycleRotation, EveryCycleLengthOfAtLeastThreeIsClean) {
  // Rectangular ring of an r x c block rotated by one step.
  const auto map = empty_map(8, 8);
  for (int rows = 2; rows <= 4; ++rows)
    for (int cols = 2; cols <= 4; ++cols) {
      std::vector<VertexId> ring;
      for (int i = 1; i <= cols; ++i) ring.push_back(at_xy(*map, i, 1));
      for (int j = 2; j <= rows; ++j) ring.push_back(at_xy(*map, cols, j));
      for (int i = cols - 1; i >= 1; --i) ring.push_back(at_xy(*map, i, rows));
      for (int j = rows - 1; j >= 2; --j) ring.push_back(at_xy(*map, 1, j));
      Plan plan;
      Configuration s, g;
      for (std::size_t k = 0; k < ring.size(); ++k) {
        s.push_back(ring[k]);
        g.push_back(ring[(k + 1) % ring.size()]);
        plan.push_back({s.back(), g.back()});
      }
      EXPECT_TRUE(validate_plan(*map, make_instance(map, s, g), plan).empty()) << rows << "x" << cols;
    }
  // a length-2 "cycle" is a swap
  const Plan two{{at_xy(*map, 1, 1), at_xy(*map, 2, 1)}, {at_xy(*map, 2, 1), at_xy(*map, 1, 1)}};
  EXPECT_EQ(count_conflicts(two), 1u);
}

TEST(PlanProperties, ValidIffNoConflictsAndAboveLowerBounds) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto map = empty_map(4, 4);
    const DistanceOracle o(map);
    const std::size_t n = 1 + uniform_below(rng, 4);
    std::vector<VertexId> cells = map->free_vertices();
    const auto starts = sample_without_replacement(cells, n, rng);
    // random walks; goals are where they end up
    Plan plan(n);
    for (std::size_t r = 0; r < n; ++r) {
      plan[r].push_back(starts[r]);
      for (int t = 0; t < 4; ++t) {
        const auto nb = oracle::step_targets(*map, plan[r].back());
        plan[r].push_back(nb[uniform_below(rng, nb.size())]);
      }
    }
    Configuration goals;
    for (auto& p : plan) goals.push_back(p.back());
    if (std::set<VertexId>(goals.begin(), goals.end()).size() != n) continue;
    const auto inst = make_instance(map, starts, goals);
    const auto report = validate_plan(*map, inst, plan);
    EXPECT_EQ(report.empty(), count_conflicts(plan) == 0);
    if (report.empty()) {
      const auto m = metrics(plan);
      const auto lb = lower_bounds(o, inst);
      EXPECT_GE(m.makespan, lb.makespan);
      EXPECT_GE(m.soc, lb.soc);
    }
  }
}
