#include <gtest/gtest.h>

#include <sstream>

#include "densemapf/bench.hpp"
#include "test_util.hpp"

using namespace densemapf;
using namespace testutil;

namespace {

RunRecord solved(double secs, std::size_t mk, std::size_t soc, std::size_t mk_lb, std::size_t soc_lb) {
  RunRecord r;
  r.solver = "ecbs:1.5";
  r.map = "m";
  r.generator = "uniform";
  r.robots = 10;
  r.outcome = Outcome::Solved;
  r.seconds = secs;
  r.makespan = mk;
  r.soc = soc;
  r.mkpn_lb = mk_lb;
  r.soc_lb = soc_lb;
  return r;
}

RunRecord timed_out() {
  RunRecord r = solved(60, 0, 0, 10, 100);
  r.outcome = Outcome::Timeout;
  return r;
}

BenchSuite small_suite(std::size_t robots, std::size_t reps, double limit) {
  BenchSuite s;
  s.maps = {empty_map(8, 8)};
  s.robots = {robots};
  s.reps = reps;
  s.time_limit = limit;
  return s;
}

}  // namespace

TEST(SolverSpec, ParsesNamesAndOverrides) {
  const auto e = parse_solver("ecbs:1.5");
  EXPECT_EQ(e.kind, SolverKind::Ecbs);
  EXPECT_DOUBLE_EQ(e.w1, 1.5);
  EXPECT_EQ(e.tiebreak, TieBreak::bySoc);
  EXPECT_DOUBLE_EQ(parse_solver("cbs").w1, 1.0);

  const auto d = parse_solver("dcbs/trigger=poc:0.10/w2=2/gate=soc");
  EXPECT_EQ(d.kind, SolverKind::Dcbs);
  EXPECT_EQ(d.trigger.kind, TriggerPolicy::Kind::PocRatio);
  EXPECT_DOUBLE_EQ(d.w2, 2.0);
  EXPECT_EQ(d.gate, GateObjective::Soc);
  EXPECT_EQ(d.tiebreak, TieBreak::byLifo);
  EXPECT_TRUE(d.needs_db());
  EXPECT_TRUE(std::isinf(parse_solver("dcbs/w2=inf").w2));

  const auto s = parse_solver("scbs/rho=0.4/window=7/mid=ecbs:2");
  EXPECT_EQ(s.kind, SolverKind::Scbs);
  EXPECT_DOUBLE_EQ(s.density.rho, 0.4);
  EXPECT_EQ(s.density.window, 7);
  EXPECT_DOUBLE_EQ(s.mid_w1, 2.0);
  EXPECT_EQ(s.label, "scbs/rho=0.4/window=7/mid=ecbs:2");
}

TEST(SolverSpec, BaseCarriesCommandLineDefaults) {
  SolverSpec base;
  base.trigger = TriggerPolicy::stagnation(100, 0);
  base.w2 = 2;
  const auto d = SolverSpec::parse("dcbs", base);
  EXPECT_EQ(d.trigger.kind, TriggerPolicy::Kind::Stagnation);
  EXPECT_DOUBLE_EQ(d.w2, 2.0);
}

TEST(SolverSpec, RejectsBadSpecs) {
  for (const char* bad : {"", "astar", "ecbs:x", "ecbs:0.5", "dcbs/w2=0.5", "dcbs/trigger=foo", "scbs/window=4",
                          "scbs/rho=0", "dcbs/nokey", "dcbs/color=red", "scbs/mid=cbs"})
    EXPECT_THROW(parse_solver(bad), ConfigError) << bad;
}

TEST(Summarize, AllTimeoutsHaveNoMeans) {
  const auto rows = summarize({timed_out(), timed_out()});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].success_rate, 0.0);
  EXPECT_FALSE(rows[0].mean_seconds);
  EXPECT_FALSE(rows[0].mean_mkpn_ratio);
  EXPECT_FALSE(rows[0].mean_soc_ratio);
}

TEST(Summarize, SingleRunIsItsOwnMean) {
  const auto rows = summarize({solved(2.5, 15, 120, 10, 100)});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].success_rate, 1.0);
  EXPECT_DOUBLE_EQ(*rows[0].mean_seconds, 2.5);
  EXPECT_DOUBLE_EQ(*rows[0].mean_mkpn_ratio, 1.5);
  EXPECT_DOUBLE_EQ(*rows[0].mean_soc_ratio, 1.2);
}

TEST(Summarize, MixedRunsAverageSolvedOnly) {
  std::vector<RunRecord> recs;
  for (int k = 0; k < 15; ++k) recs.push_back(solved(1.0 + k, 10 + k, 100, 10, 100));
  for (int k = 0; k < 5; ++k) recs.push_back(timed_out());
  const auto rows = summarize(recs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].runs, 20u);
  EXPECT_DOUBLE_EQ(rows[0].success_rate, 0.75);
  EXPECT_DOUBLE_EQ(*rows[0].mean_seconds, 8.0);
  EXPECT_DOUBLE_EQ(*rows[0].mean_mkpn_ratio, 1.7);
}

TEST(Summarize, GroupsAreOrderedAndSeparated) {
  auto a = solved(1, 10, 100, 10, 100);
  auto b = a;
  b.solver = "cbs";
  auto c = a;
  c.robots = 5;
  const auto rows = summarize({a, b, c});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].solver, "cbs");
  EXPECT_EQ(rows[1].robots, 5u);
  EXPECT_EQ(rows[2].robots, 10u);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(RunSuite, OneInstanceOneSolverGivesOneRecord) {
  std::size_t sunk = 0;
  const auto recs = run_suite(small_suite(5, 1, 10), {parse_solver("ecbs:1.5")}, nullptr,
                              [&](const RunRecord&) { ++sunk; });
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(sunk, 1u);
  EXPECT_TRUE(recs[0].solved());
  EXPECT_GE(recs[0].makespan, recs[0].mkpn_lb);
  EXPECT_GE(recs[0].soc, recs[0].soc_lb);
}

TEST(RunSuite, ExhaustedBudgetIsATimeout) {
  auto suite = small_suite(40, 1, 1e-6);
  const auto recs = run_suite(suite, {parse_solver("cbs")}, nullptr);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].outcome, Outcome::Timeout);
  std::ostringstream out;
  write_record(out, recs[0]);
  EXPECT_NE(out.str().find(",timeout,"), std::string::npos);
  EXPECT_NE(out.str().find(",,,"), std::string::npos);
}

TEST(RunSuite, MissingDatabaseFailsBeforeAnyRun) {
  std::size_t sunk = 0;
  EXPECT_THROW(run_suite(small_suite(5, 2, 10), {parse_solver("ecbs"), parse_solver("dcbs")}, nullptr,
                         [&](const RunRecord&) { ++sunk; }),
               ConfigError);
  EXPECT_EQ(sunk, 0u);
  auto bad = small_suite(5, 0, 10);
  EXPECT_THROW(run_suite(bad, {parse_solver("ecbs")}, nullptr), ConfigError);
}

TEST(RunSuite, RerunsAreReproducible) {
  auto suite = small_suite(12, 3, 10);
  suite.jobs = 2;
  const std::vector<SolverSpec> solvers{parse_solver("ecbs:1.5"), parse_solver("scbs")};
  auto key = [](std::vector<RunRecord> v) {
    std::sort(v.begin(), v.end(), [](const RunRecord& a, const RunRecord& b) {
      return std::tie(a.instance_id, a.solver) < std::tie(b.instance_id, b.solver);
    });
    std::vector<std::tuple<std::string, std::string, std::size_t, std::size_t>> out;
    for (const auto& r : v) out.emplace_back(r.instance_id, r.solver, r.makespan, r.soc);
    return out;
  };
  const auto a = run_suite(suite, solvers, nullptr);
  const auto b = run_suite(suite, solvers, nullptr);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(key(a), key(b));
}

TEST(RunSuite, GaussSuiteBuildsItsOwnMaps) {
  BenchSuite s;
  s.generator = Generator::Gauss;
  s.robots = {10};
  s.reps = 2;
  s.time_limit = 10;
  const auto recs = run_suite(s, {parse_solver("ecbs:1.5")}, nullptr);
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) EXPECT_EQ(r.generator, "gauss");
}

TEST(Records, InvalidPlansAreNotCountedAsSolved) {
  const auto map = empty_map(4, 1);
  const auto inst = make_instance(map, {at_xy(*map, 1, 1)}, {at_xy(*map, 3, 1)});
  SolveOutcome res;
  res.status = SolveStatus::Solved;
  res.plan = {path_of(*map, {{1, 1}, {3, 1}})};
  const auto rec = make_record(inst, "x", parse_solver("ecbs"), {2, 2}, std::move(res));
  EXPECT_EQ(rec.outcome, Outcome::Error);
  EXPECT_NE(rec.message.find("teleport"), std::string::npos);
}

TEST(Records, CsvQuotesAwkwardFields) {
  auto r = solved(1, 12, 110, 10, 100);
  r.instance_id = "a,b";
  r.message = "say \"hi\"";
  std::ostringstream out;
  write_record(out, r);
  EXPECT_EQ(out.str(),
            "\"a,b\",m,uniform,10,0,ecbs:1.5,solved,1.0000,0,12,110,10,100,1.20000,1.10000,,\"say \"\"hi\"\"\"\n");
  EXPECT_EQ(std::string(kRecordHeader).substr(0, 9), "instance,");
}

TEST(PlanFile, RoundTrips) {
  const auto map = empty_map(5, 5);
  const Plan plan{path_of(*map, {{1, 1}, {2, 1}, {2, 2}}), path_of(*map, {{5, 5}})};
  std::stringstream io;
  write_plan(io, *map, plan);
  EXPECT_EQ(io.str(), "1,1 2,1 2,2\n5,5\n");
  EXPECT_EQ(read_plan(io, *map), plan);
  std::istringstream bad("1,1 9,9\n");
  EXPECT_THROW(read_plan(bad, *map), ParseError);
}

TEST(TraceCsv, HasTheDocumentedColumns) {
  std::ostringstream out;
  write_trace_csv(out, {{1, 7, 0}, {2, 5, 3}});
  EXPECT_EQ(out.str(), "iteration,expanded_noc,open_size\n1,7,0\n2,5,3\n");
}
