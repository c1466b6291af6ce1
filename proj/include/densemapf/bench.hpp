#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcbs.hpp"
#include "ecbs.hpp"
#include "grid.hpp"
#include "instance.hpp"
#include "plan.hpp"
#include "primitive_db.hpp"
#include "scbs.hpp"
#include "scenario.hpp"

namespace densemapf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind { Cbs, Ecbs, Dcbs, DbRoot, Scbs };

/// One solver configuration. Textual form: `name[:w1]` followed by optional
/// `/key=value` overrides, e.g. `ecbs:1.5`, `dcbs/trigger=poc:0.10/w2=2`,
/// `scbs/rho=0.5/window=5/mid=ecbs:1.5`. `ddm` resolves the root node with the
/// database only.
struct SolverSpec {
  SolverKind kind = SolverKind::Ecbs;
  double w1 = 1.5;
  double mid_w1 = 1.5;  // middle phase of scbs
  TieBreak tiebreak = TieBreak::bySoc;
  TriggerPolicy trigger = TriggerPolicy::noc(20);
  double w2 = std::numeric_limits<double>::infinity();
  GateObjective gate = GateObjective::Makespan;
  DensityParams density;
  std::optional<std::uint64_t> order_seed;
  std::string label;

  bool needs_db() const { return kind == SolverKind::Dcbs || kind == SolverKind::DbRoot; }

  /// `base` carries the command-line defaults for DCBS and SCBS settings.
  static SolverSpec parse(const std::string& text, const SolverSpec& base) {
    SolverSpec s = base;
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, '/');) parts.push_back(p);
    if (parts.empty() || parts[0].empty()) throw ConfigError("empty solver spec");
    std::string head = parts[0];
    std::optional<double> head_w1;
    if (auto colon = head.find(':'); colon != std::string::npos) {
      head_w1 = number(head.substr(colon + 1), text);
      head = head.substr(0, colon);
    }
    if (head == "cbs") {
      s.kind = SolverKind::Cbs;
    } else if (head == "ecbs") {
      s.kind = SolverKind::Ecbs;
    } else if (head == "dcbs") {
      s.kind = SolverKind::Dcbs;
    } else if (head == "ddm") {
      s.kind = SolverKind::DbRoot;
    } else if (head == "scbs") {
      s.kind = SolverKind::Scbs;
    } else {
      throw ConfigError("unknown solver '" + head + "' in '" + text + "'");
    }
    s.tiebreak = s.kind == SolverKind::Dcbs ? TieBreak::byLifo : TieBreak::bySoc;
    if (head_w1) s.w1 = *head_w1;
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const auto eq = parts[k].find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value in '" + text + "'");
      s.set(parts[k].substr(0, eq), parts[k].substr(eq + 1), text);
    }
    if (s.kind == SolverKind::Cbs) s.w1 = 1.0;
    if (s.w1 < 1.0) throw ConfigError("w1 must be at least 1 in '" + text + "'");
    s.label = text;
    return s;
  }

  void set(const std::string& key, const std::string& value, const std::string& text = {}) {
    try {
      if (key == "w1") {
        w1 = number(value, text);
      } else if (key == "mid") {
        mid_w1 = parse_mid_solver(value);
      } else if (key == "tiebreak") {
        if (value == "soc") tiebreak = TieBreak::bySoc;
        else if (value == "lifo") tiebreak = TieBreak::byLifo;
        else throw ConfigError("tiebreak must be soc or lifo");
      } else if (key == "trigger") {
        trigger = TriggerPolicy::parse(value);
      } else if (key == "w2") {
        w2 = parse_w2(value);
      } else if (key == "gate") {
        gate = parse_gate(value);
      } else if (key == "rho") {
        density.rho = number(value, text);
      } else if (key == "window") {
        density.window = int(number(value, text));
      } else if (key == "order-seed") {
        order_seed = std::uint64_t(number(value, text));
      } else {
        throw ConfigError("unknown solver option '" + key + "'");
      }
      density.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(e.what()) + (text.empty() ? "" : " in '" + text + "'"));
    }
  }

  /// `ecbs:<w1>` is the only supported middle-phase solver.
  static double parse_mid_solver(const std::string& v) {
    if (v.rfind("ecbs:", 0) != 0) throw ConfigError("middle solver must be ecbs:<w1>");
    const double w = number(v.substr(5), v);
    if (w < 1.0) throw ConfigError("middle solver w1 must be at least 1");
    return w;
  }

  static double parse_w2(const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    const double w = number(v, v);
    if (w < 1.0) throw ConfigError("w2 must be at least 1 or inf");
    return w;
  }

 private:
  static double number(const std::string& v, const std::string& text) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError("bad number '" + v + "' in '" + text + "'");
    return x;
  }
};

inline SolverSpec parse_solver(const std::string& text) { return SolverSpec::parse(text, SolverSpec{}); }

struct SolveOutcome {
  SolveStatus status = SolveStatus::Exhausted;
  Plan plan;
  double seconds = 0;
  std::size_t expansions = 0;
  std::vector<TraceRow> trace;
};

/// Runs one configured solver. `db` must be set for database-backed solvers.
inline SolveOutcome run_solver(const SolverSpec& spec, const DistanceOracle& oracle, const Instance& inst,
                               const DbBundle* db, double time_limit, bool record_trace = false) {
  if (spec.needs_db() && !db) throw ConfigError("solver '" + spec.label + "' needs a primitive database");
  SolveOutcome out;
  auto take = [&](EcbsResult&& r) {
    out.status = r.status;
    out.plan = std::move(r.plan);
    out.seconds = r.seconds;
    out.expansions = r.expansions;
    out.trace = std::move(r.trace);
  };
  switch (spec.kind) {
    case SolverKind::Cbs:
    case SolverKind::Ecbs: {
      EcbsOptions o;
      o.w1 = spec.w1;
      o.tiebreak = spec.tiebreak;
      o.time_limit = time_limit;
      o.record_trace = record_trace;
      take(solve_ecbs(oracle, inst, o));
      break;
    }
    case SolverKind::Dcbs: {
      DcbsConfig c;
      c.w1 = spec.w1;
      c.w2 = spec.w2;
      c.trigger = spec.trigger;
      c.tiebreak = spec.tiebreak;
      c.gate = spec.gate;
      c.time_limit = time_limit;
      c.record_trace = record_trace;
      take(solve_dcbs(oracle, inst, *db, c));
      break;
    }
    case SolverKind::DbRoot:
      take(solve_db_at_root(oracle, inst, *db, time_limit));
      break;
    case SolverKind::Scbs: {
      ScbsOptions o;
      o.density = spec.density;
      o.w1 = spec.mid_w1;
      o.time_limit = time_limit;
      o.order_seed = spec.order_seed;
      auto r = solve_scbs(oracle, inst, o);
      out.status = r.status;
      out.plan = std::move(r.plan);
      out.seconds = r.seconds;
      out.expansions = r.middle_expansions;
      break;
    }
  }
  return out;
}

enum class Outcome { Solved, Timeout, Failed, Error };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Solved: return "solved";
    case Outcome::Timeout: return "timeout";
    case Outcome::Failed: return "failed";
    case Outcome::Error: return "error";
  }
  return "?";
}

struct RunRecord {
  std::string instance_id;
  std::string map;
  std::string generator;
  std::size_t robots = 0;
  std::uint64_t seed = 0;
  std::string solver;
  Outcome outcome = Outcome::Error;
  std::string message;
  double seconds = 0;
  std::size_t expansions = 0;
  std::size_t makespan = 0;
  std::size_t soc = 0;
  std::size_t mkpn_lb = 0;
  std::size_t soc_lb = 0;
  std::string trace_file;

  bool solved() const { return outcome == Outcome::Solved; }
  double mkpn_ratio() const { return mkpn_lb ? double(makespan) / double(mkpn_lb) : 1.0; }
  double soc_ratio() const { return soc_lb ? double(soc) / double(soc_lb) : 1.0; }
};

/// Turns a solver outcome into a record, revalidating any returned plan.
inline RunRecord make_record(const Instance& inst, const std::string& instance_id, const SolverSpec& spec,
                             const LowerBounds& lb, SolveOutcome&& res) {
  RunRecord rec;
  rec.instance_id = instance_id;
  rec.map = inst.map->name();
  rec.generator = inst.generator;
  rec.robots = inst.size();
  rec.seed = inst.seed;
  rec.solver = spec.label;
  rec.seconds = res.seconds;
  rec.expansions = res.expansions;
  rec.mkpn_lb = lb.makespan;
  rec.soc_lb = lb.soc;
  if (res.status == SolveStatus::Solved) {
    const auto bad = validate_plan(*inst.map, inst, res.plan);
    if (bad.empty()) {
      rec.outcome = Outcome::Solved;
      const auto m = metrics(res.plan);
      rec.makespan = m.makespan;
      rec.soc = m.soc;
    } else {
      rec.outcome = Outcome::Error;
      rec.message = std::string("plan failed validation: ") + to_string(bad.front().kind);
    }
  } else if (res.status == SolveStatus::Timeout) {
    rec.outcome = Outcome::Timeout;
  } else {
    rec.outcome = Outcome::Failed;
    rec.message = to_string(res.status);
  }
  return rec;
}

enum class Generator { Uniform, Corner, Gauss };

inline Generator parse_generator(const std::string& s) {
  if (s == "uniform") return Generator::Uniform;
  if (s == "corner") return Generator::Corner;
  if (s == "gauss") return Generator::Gauss;
  throw ConfigError("generator must be uniform, corner or gauss");
}

inline const char* to_string(Generator g) {
  switch (g) {
    case Generator::Uniform: return "uniform";
    case Generator::Corner: return "corner";
    case Generator::Gauss: return "gauss";
  }
  return "?";
}

struct BenchSuite {
  std::vector<MapPtr> maps;  // ignored by the gauss generator, which sizes its own map
  Generator generator = Generator::Uniform;
  std::vector<std::size_t> robots;
  std::size_t reps = 20;
  double time_limit = 60.0;
  std::uint64_t seed_base = 0;
  double sigma = 5.0;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> trace_dir;

  void validate() const {
    if (reps < 1) throw ConfigError("repetitions must be at least 1");
    if (!(time_limit > 0)) throw ConfigError("time limit must be positive");
    if (robots.empty()) throw ConfigError("no robot counts given");
    if (generator != Generator::Gauss && maps.empty()) throw ConfigError("no maps given");
    if (jobs < 1) throw ConfigError("need at least one worker");
  }
};

/// Instance `rep` of a suite cell; seeds depend only on the seed base and rep.
inline Instance suite_instance(const BenchSuite& suite, const MapPtr& map, std::size_t robots, std::size_t rep) {
  const std::uint64_t seed = suite.seed_base + rep;
  switch (suite.generator) {
    case Generator::Uniform: return gen_uniform(map, robots, seed);
    case Generator::Corner: return gen_corner_rearrangement(map, robots, seed);
    case Generator::Gauss: return gen_gaussian(robots, suite.sigma, seed);
  }
  throw std::logic_error("unknown generator");
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "iteration,expanded_noc,open_size\n";
  for (const auto& r : rows) out << r.iteration << ',' << r.expanded_noc << ',' << r.open_size << '\n';
}

inline constexpr const char* kRecordHeader =
    "instance,map,generator,robots,seed,solver,outcome,seconds,expansions,makespan,soc,mkpn_lb,soc_lb,"
    "mkpn_ratio,soc_ratio,trace,message";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline void write_record(std::ostream& out, const RunRecord& r) {
  out << csv_field(r.instance_id) << ',' << csv_field(r.map) << ',' << r.generator << ',' << r.robots << ','
      << r.seed << ',' << csv_field(r.solver) << ',' << to_string(r.outcome) << ',' << std::fixed
      << std::setprecision(4) << r.seconds << ',' << r.expansions << ',';
  if (r.solved())
    out << r.makespan << ',' << r.soc << ',' << r.mkpn_lb << ',' << r.soc_lb << ',' << std::setprecision(5)
        << r.mkpn_ratio() << ',' << r.soc_ratio();
  else
    out << ",," << r.mkpn_lb << ',' << r.soc_lb << ",,";
  out << ',' << csv_field(r.trace_file) << ',' << csv_field(r.message) << '\n';
  out << std::defaultfloat;
}

using RecordSink = std::function<void(const RunRecord&)>;

/// Executes every (instance, solver) pair. Records reach `sink` one at a
/// time, in completion order, from a single writer lock.
inline std::vector<RunRecord> run_suite(const BenchSuite& suite, const std::vector<SolverSpec>& solvers,
                                        const DbBundle* db, const RecordSink& sink = {}) {
  suite.validate();
  if (solvers.empty()) throw ConfigError("no solvers given");
  for (const auto& s : solvers)
    if (s.needs_db() && !db) throw ConfigError("solver '" + s.label + "' needs a primitive database");
  if (suite.trace_dir) std::filesystem::create_directories(*suite.trace_dir);

  struct Task {
    MapPtr map;
    std::size_t robots;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  const std::vector<MapPtr> maps = suite.generator == Generator::Gauss ? std::vector<MapPtr>{nullptr} : suite.maps;
  for (const auto& m : maps)
    for (std::size_t n : suite.robots)
      for (std::size_t rep = 0; rep < suite.reps; ++rep) tasks.push_back({m, n, rep});

  std::map<const GridMap*, std::shared_ptr<const DistanceOracle>> oracles;
  for (const auto& m : maps)
    if (m) oracles[m.get()] = std::make_shared<const DistanceOracle>(m);

  std::vector<RunRecord> records;
  std::mutex writer;
  std::atomic<std::size_t> next{0};
  auto publish = [&](RunRecord&& r) {
    std::lock_guard lock(writer);
    if (sink) sink(r);
    records.push_back(std::move(r));
  };
  auto worker = [&] {
    for (std::size_t k; (k = next++) < tasks.size();) {
      const Task& task = tasks[k];
      Instance inst;
      std::shared_ptr<const DistanceOracle> oracle;
      std::string id;
      try {
        inst = suite_instance(suite, task.map, task.robots, task.rep);
        oracle = task.map ? oracles.at(task.map.get()) : std::make_shared<const DistanceOracle>(inst.map);
        id = inst.map->name() + "-" + to_string(suite.generator) + "-" + std::to_string(task.robots) + "-" +
             std::to_string(inst.seed);
      } catch (const std::exception& e) {
        for (const auto& spec : solvers) {
          RunRecord r;
          r.map = task.map ? task.map->name() : "";
          r.generator = to_string(suite.generator);
          r.robots = task.robots;
          r.seed = suite.seed_base + task.rep;
          r.solver = spec.label;
          r.message = e.what();
          publish(std::move(r));
        }
        continue;
      }
      const LowerBounds lb = lower_bounds(*oracle, inst);
      for (std::size_t si = 0; si < solvers.size(); ++si) {
        const auto& spec = solvers[si];
        RunRecord rec;
        try {
          auto res = run_solver(spec, *oracle, inst, db, suite.time_limit, suite.trace_dir.has_value());
          std::vector<TraceRow> trace = std::move(res.trace);
          rec = make_record(inst, id, spec, lb, std::move(res));
          if (suite.trace_dir && !trace.empty()) {
            const auto path = *suite.trace_dir / (id + "-s" + std::to_string(si) + ".csv");
            std::ofstream out(path);
            write_trace_csv(out, trace);
            rec.trace_file = path.filename().string();
          }
        } catch (const std::exception& e) {
          rec.instance_id = id;
          rec.map = inst.map->name();
          rec.generator = inst.generator;
          rec.robots = inst.size();
          rec.seed = inst.seed;
          rec.solver = spec.label;
          rec.outcome = Outcome::Error;
          rec.message = e.what();
        }
        publish(std::move(rec));
      }
    }
  };
  const unsigned jobs = std::min<unsigned>(suite.jobs, unsigned(std::max<std::size_t>(tasks.size(), 1)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

struct SummaryRow {
  std::string solver;
  std::string map;
  std::string generator;
  std::size_t robots = 0;
  std::size_t runs = 0;
  std::size_t solved = 0;
  double success_rate = 0;
  std::optional<double> mean_seconds;
  std::optional<double> mean_mkpn_ratio;
  std::optional<double> mean_soc_ratio;
};

/// Per (solver, map, generator, robots) aggregates; metric means cover solved runs only.
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records to summarize");
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, SummaryRow> groups;
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::array<double, 3>> sums;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.solver, r.map, r.generator, r.robots);
    auto& g = groups[key];
    g.solver = r.solver;
    g.map = r.map;
    g.generator = r.generator;
    g.robots = r.robots;
    ++g.runs;
    if (!r.solved()) continue;
    ++g.solved;
    auto& s = sums[key];
    s[0] += r.seconds;
    s[1] += r.mkpn_ratio();
    s[2] += r.soc_ratio();
  }
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    g.success_rate = double(g.solved) / double(g.runs);
    if (g.solved) {
      const auto& s = sums[key];
      g.mean_seconds = s[0] / double(g.solved);
      g.mean_mkpn_ratio = s[1] / double(g.solved);
      g.mean_soc_ratio = s[2] / double(g.solved);
    }
    out.push_back(g);
  }
  return out;
}

inline nlohmann::json summary_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& r : rows)
    out.push_back({{"solver", r.solver},
                   {"map", r.map},
                   {"generator", r.generator},
                   {"robots", r.robots},
                   {"runs", r.runs},
                   {"solved", r.solved},
                   {"success_rate", r.success_rate},
                   {"mean_seconds", opt(r.mean_seconds)},
                   {"mean_mkpn_ratio", opt(r.mean_mkpn_ratio)},
                   {"mean_soc_ratio", opt(r.mean_soc_ratio)}});
  return out;
}

// ---------------------------------------------------------------------------
// Plan files: one robot per line, `i,j` pairs (1-based) separated by spaces.

inline void write_plan(std::ostream& out, const GridMap& map, const Plan& plan) {
  for (const auto& p : plan) {
    for (std::size_t t = 0; t < p.size(); ++t) {
      const Vertex v = map.vertex(p[t]);
      out << (t ? " " : "") << v.i << ',' << v.j;
    }
    out << '\n';
  }
}

inline Plan read_plan(std::istream& in, const GridMap& map) {
  Plan plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Path p;
    for (std::string tok; ls >> tok;) {
      int i = 0, j = 0;
      char comma = 0;
      std::istringstream ts(tok);
      if (!(ts >> i >> comma >> j) || comma != ',') throw ParseError("bad plan cell '" + tok + "'", line_no);
      if (!map.in_bounds(Vertex{i, j})) throw ParseError("plan cell outside the map", line_no);
      p.push_back(map.id(Vertex{i, j}));
    }
    plan.push_back(std::move(p));
  }
  return plan;
}

}  // namespace densemapf
