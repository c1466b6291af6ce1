#include <gtest/gtest.h>

#include "densemapf/dcbs.hpp"
#include "densemapf/random.hpp"
#include "densemapf/scenario.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace densemapf;
using namespace testutil;

namespace {

const DbBundle& shared_db() {
  static const DbBundle db = [] {
    if (auto found = DbBundle::locate()) return std::move(*found);
    return DbBundle::generate(4);
  }();
  return db;
}

DcbsConfig config(double w2, TriggerPolicy trig = TriggerPolicy::noc(20)) {
  DcbsConfig c;
  c.w2 = w2;
  c.trigger = trig;
  c.time_limit = 30;
  return c;
}

const std::vector<std::size_t> kEmpty;

}  // namespace

TEST(Trigger, SolvedNodeAlwaysTriggers) {
  for (auto p : {TriggerPolicy::noc(0), TriggerPolicy::poc(0.1), TriggerPolicy::stagnation(100)})
    EXPECT_TRUE(db_triggered(p, 0, kEmpty, 300));
}

TEST(Trigger, PocBoundary) {
  const auto p = TriggerPolicy::poc(0.10);
  EXPECT_FALSE(db_triggered(p, 31, kEmpty, 300));
  EXPECT_TRUE(db_triggered(p, 30, kEmpty, 300));
  EXPECT_TRUE(db_triggered(p, 25, kEmpty, 300));
}

TEST(Trigger, NocThreshold) {
  const auto p = TriggerPolicy::noc(20);
  EXPECT_TRUE(db_triggered(p, 20, kEmpty, 500));
  EXPECT_FALSE(db_triggered(p, 21, kEmpty, 500));
}

TEST(Trigger, StagnationWindow) {
  const auto p = TriggerPolicy::stagnation(100, 0);
  std::vector<std::size_t> flat(100, 40);
  EXPECT_TRUE(db_triggered(p, 40, flat, 400));
  auto drop = flat;
  for (std::size_t i = 60; i < drop.size(); ++i) drop[i] = 39;
  EXPECT_FALSE(db_triggered(p, 39, drop, 400));
  EXPECT_FALSE(db_triggered(p, 40, std::vector<std::size_t>(99, 40), 400));
  EXPECT_TRUE(db_triggered(TriggerPolicy::stagnation(100, 1), 39, drop, 400));
  // an older improvement outside the window does not count
  std::vector<std::size_t> old{90, 80};
  old.insert(old.end(), 100, 40);
  EXPECT_TRUE(db_triggered(p, 40, old, 400));
}

TEST(Trigger, ParseRoundTrip) {
  for (std::string s : {"noc:20", "poc:0.1", "stag:100:0", "stag:50:2"})
    EXPECT_EQ(to_string(TriggerPolicy::parse(s)), s);
  EXPECT_EQ(TriggerPolicy::parse("stag:100").window, 100u);
  for (std::string s : {"noc", "poc:0", "poc:1.5", "stag:0", "foo:1", "noc:x"})
    EXPECT_THROW(TriggerPolicy::parse(s), std::invalid_argument) << s;
  EXPECT_EQ(parse_gate("mkpn"), GateObjective::Makespan);
  EXPECT_EQ(parse_gate("soc"), GateObjective::Soc);
  EXPECT_THROW(parse_gate("x"), std::invalid_argument);
}

TEST(Gate, Arithmetic) {
  const auto map = empty_map(10, 1);
  Plan at_lb{path_of(*map, {{1, 1}, {2, 1}, {3, 1}})};
  const LowerBounds lb{2, 2};
  EXPECT_TRUE(check_optimality(at_lb, lb, 1.0, GateObjective::Makespan));
  EXPECT_TRUE(check_optimality(at_lb, lb, 1.0, GateObjective::Soc));
  Plan slow{path_of(*map, {{1, 1}, {1, 1}, {1, 1}, {2, 1}, {2, 1}, {3, 1}})};
  const LowerBounds lb2{2, 2};
  // makespan 5 = 2 * 2 + 1
  EXPECT_FALSE(check_optimality(slow, lb2, 2.0, GateObjective::Makespan));
  EXPECT_TRUE(check_optimality(slow, lb2, 2.5, GateObjective::Makespan));
  EXPECT_TRUE(check_optimality(slow, lb2, std::numeric_limits<double>::infinity(), GateObjective::Soc));
}

TEST(DbResolution, ConflictFreeIsUnchanged) {
  const auto map = empty_map(6, 6);
  const Plan plan{path_of(*map, {{1, 1}, {2, 1}}), path_of(*map, {{1, 3}, {1, 4}})};
  const auto out = db_resolution(*map, shared_db(), plan);
  ASSERT_TRUE(out);
  EXPECT_EQ(*out, plan);
}

TEST(DbResolution, HeadOnMidMapSplicesOnce) {
  const auto map = empty_map(20, 20);
  const auto inst = make_instance(map, {at_xy(*map, 8, 10), at_xy(*map, 12, 10)},
                                  {at_xy(*map, 12, 10), at_xy(*map, 8, 10)});
  const Plan plan{path_of(*map, {{8, 10}, {9, 10}, {10, 10}, {11, 10}, {12, 10}}),
                  path_of(*map, {{12, 10}, {11, 10}, {10, 10}, {9, 10}, {8, 10}})};
  ASSERT_EQ(count_conflicts(plan), 1u);
  ResolutionStats stats;
  const auto out = db_resolution(*map, shared_db(), plan, nullptr, &stats);
  ASSERT_TRUE(out);
  EXPECT_EQ(stats.splices, 1u);
  EXPECT_TRUE(valid(inst, *out));
}

TEST(DbResolution, CorridorFails) {
  const auto map = empty_map(10, 1);
  const Plan plan{path_of(*map, {{3, 1}, {4, 1}, {5, 1}}), path_of(*map, {{5, 1}, {4, 1}, {3, 1}})};
  EXPECT_FALSE(db_resolution(*map, shared_db(), plan));
}

// Root plans at 10-24% density; denser roots often need rerouting that
// splicing alone cannot provide.
TEST(DbResolution, RepairedPlansValidate) {
  int repaired = 0;
  for (int k = 0; k < 60; ++k) {
    const auto map = empty_map(10, 10);
    const DistanceOracle o(map);
    const auto inst = gen_uniform(map, 10 + std::size_t(k % 15), std::uint64_t(k));
    EcbsSolver solver(o, inst, EcbsOptions{});
    const auto root = solver.make_root();
    ASSERT_TRUE(root);
    const Plan plan = materialize(*root).plan();
    ResolutionStats stats;
    const auto out = db_resolution(*map, shared_db(), plan, nullptr, &stats);
    if (!out) continue;
    ++repaired;
    EXPECT_TRUE(valid(inst, *out)) << k;
    EXPECT_LE(stats.iterations, 10 * (count_conflicts(plan) + 1));
  }
  EXPECT_GE(repaired, 45);
}

TEST(Dcbs, SparseInstanceMatchesEcbs) {
  const auto map = empty_map(20, 20);
  const DistanceOracle o(map);
  const auto inst = make_instance(map, {at_xy(*map, 1, 1), at_xy(*map, 1, 5)}, {at_xy(*map, 10, 1), at_xy(*map, 10, 5)});
  auto cfg = config(2.0);
  const auto d = solve_dcbs(o, inst, shared_db(), cfg);
  EcbsOptions opts;
  opts.tiebreak = TieBreak::byLifo;
  const auto e = solve_ecbs(o, inst, opts);
  ASSERT_TRUE(d.solved());
  ASSERT_TRUE(e.solved());
  EXPECT_EQ(d.root_noc, 0u);
  EXPECT_EQ(d.db_attempts, 0u);
  EXPECT_EQ(d.plan, e.plan);
}

TEST(Dcbs, ForcedResolutionFailureMatchesEcbs) {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto map = empty_map(8, 8);
    const DistanceOracle o(map);
    const auto inst = gen_uniform(map, 16, std::uint64_t(k));
    auto cfg = config(std::numeric_limits<double>::infinity(), TriggerPolicy::noc(1000));
    std::size_t calls = 0;
    cfg.resolver = [&](const Plan&) {
      ++calls;
      return std::optional<Plan>{};
    };
    const auto d = solve_dcbs(o, inst, shared_db(), cfg);
    EcbsOptions opts;
    opts.tiebreak = TieBreak::byLifo;
    opts.time_limit = 30;
    const auto e = solve_ecbs(o, inst, opts);
    ASSERT_EQ(d.status, e.status);
    EXPECT_EQ(d.plan, e.plan);
    EXPECT_EQ(d.expansions, e.expansions);
    if (e.root_noc > 0) {
      EXPECT_GT(calls, 0u);
    }
  }
}

TEST(Dcbs, MakespanGateOnFourByFour) {
  Rng rng(77);
  const auto map = empty_map(4, 4);
  const DistanceOracle o(map);
  for (int k = 0; k < 100; ++k) {
    const auto& f = map->free_vertices();
    const auto inst = make_instance(map, sample_without_replacement(f, 4, rng), sample_without_replacement(f, 4, rng));
    const auto opt = oracle::makespan(*map, inst.starts, inst.goals);
    ASSERT_TRUE(opt);
    const auto res = solve_dcbs(o, inst, shared_db(), config(2.0, TriggerPolicy::noc(3)));
    ASSERT_TRUE(res.solved()) << k;
    EXPECT_TRUE(valid(inst, res.plan));
    const auto mk = metrics(res.plan).makespan;
    EXPECT_LE(double(mk), 2.0 * *opt) << k;
    EXPECT_LE(double(mk), 2.0 * double(lower_bounds(o, inst).makespan)) << k;
  }
}

TEST(Dcbs, DenseSmallGridUsesDatabase) {
  std::size_t accepted = 0;
  for (int k = 0; k < 10; ++k) {
    const auto map = empty_map(8, 8);
    const DistanceOracle o(map);
    const auto inst = gen_uniform(map, 36, std::uint64_t(100 + k));
    const auto res = solve_dcbs(o, inst, shared_db(), config(std::numeric_limits<double>::infinity()));
    ASSERT_TRUE(res.solved()) << k;
    EXPECT_TRUE(valid(inst, res.plan));
    if (res.accepted_by_hook && res.db_attempts > 0) ++accepted;
  }
  EXPECT_GT(accepted, 0u);
}

TEST(Dcbs, RootResolutionOnlyExpandsOnce) {
  const auto map = empty_map(10, 10);
  const DistanceOracle o(map);
  const auto inst = gen_uniform(map, 40, 3);
  const auto res = solve_db_at_root(o, inst, shared_db(), 30);
  EXPECT_EQ(res.expansions, 1u);
  if (res.solved()) {
    EXPECT_TRUE(valid(inst, res.plan));
  }
}
