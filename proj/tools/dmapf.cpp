#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "densemapf/bench.hpp"

namespace fs = std::filesystem;
using namespace densemapf;

namespace {

struct SolverFlags {
  std::string trigger = "noc:20";
  std::string w2 = "inf";
  std::string gate = "mkpn";
  double rho = 0.5;
  int window = 5;
  std::string mid = "ecbs:1.5";

  void attach(CLI::App* app) {
    app->add_option("--trigger", trigger, "DCBS trigger: noc:N | poc:F | stag:K[:D]")->capture_default_str();
    app->add_option("--w2", w2, "DCBS suboptimality gate bound, a number >= 1 or inf")->capture_default_str();
    app->add_option("--gate", gate, "objective checked by the gate: mkpn | soc")->capture_default_str();
    app->add_option("--rho", rho, "SCBS preferred local density")->capture_default_str();
    app->add_option("--window", window, "SCBS density window side (odd)")->capture_default_str();
    app->add_option("--mid-solver", mid, "SCBS middle-phase solver, ecbs:<w1>")->capture_default_str();
  }

  SolverSpec base() const {
    SolverSpec s;
    s.trigger = TriggerPolicy::parse(trigger);
    s.w2 = SolverSpec::parse_w2(w2);
    s.gate = parse_gate(gate);
    s.density = {window, rho};
    s.density.validate();
    s.mid_w1 = SolverSpec::parse_mid_solver(mid);
    return s;
  }
};

std::optional<DbBundle> open_db(const std::string& flag, bool required) {
  std::optional<fs::path> path;
  if (!flag.empty()) path = flag;
  auto db = DbBundle::locate(path);
  if (!db && required)
    throw ConfigError(std::string("no primitive database: pass --db or set ") + DbBundle::kEnvVar +
                      " (create one with 'dmapf db-gen')");
  return db;
}

MapPtr open_map(const std::string& path) { return std::make_shared<const GridMap>(load_movingai_map(path)); }

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (tok.empty()) continue;
    if (auto colon = tok.find(':'); colon != std::string::npos) {
      // lo:hi:step
      std::stringstream rs(tok);
      std::size_t lo = 0, hi = 0, step = 1;
      char c1 = 0, c2 = 0;
      rs >> lo >> c1 >> hi;
      if (rs >> c2) rs >> step;
      if (!step || hi < lo) throw ConfigError("bad robot range '" + tok + "'");
      for (std::size_t n = lo; n <= hi; n += step) out.push_back(n);
    } else {
      out.push_back(std::stoul(tok));
    }
  }
  if (out.empty()) throw ConfigError("no robot counts in '" + text + "'");
  return out;
}

nlohmann::json outcome_json(const RunRecord& r) {
  nlohmann::json j{{"solver", r.solver},   {"outcome", to_string(r.outcome)}, {"seconds", r.seconds},
                   {"expansions", r.expansions}, {"mkpn_lb", r.mkpn_lb}, {"soc_lb", r.soc_lb}};
  if (r.solved()) {
    j["makespan"] = r.makespan;
    j["soc"] = r.soc;
    j["mkpn_ratio"] = r.mkpn_ratio();
    j["soc_ratio"] = r.soc_ratio();
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense multi-robot path planning: CBS/ECBS, database-assisted and sparsified solvers"};
  app.require_subcommand(1);

  // map
  auto* map_cmd = app.add_subcommand("map", "write a built-in map as a MovingAI .map file");
  std::string map_kind = "warehouse", map_out;
  int map_w = 20, map_h = 20;
  map_cmd->add_option("--kind", map_kind, "warehouse | empty")->capture_default_str();
  map_cmd->add_option("--width", map_w, "width of an empty map")->capture_default_str();
  map_cmd->add_option("--height", map_h, "height of an empty map")->capture_default_str();
  map_cmd->add_option("--out", map_out, "output .map path")->required();

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate an instance (.scen plus .json sidecar and .map copy)");
  std::string gen_map, gen_kind = "uniform", gen_out;
  std::size_t gen_robots = 0;
  std::uint64_t gen_seed = 0;
  double gen_sigma = 5.0;
  gen_cmd->add_option("--map", gen_map, "MovingAI map (unused by gauss)");
  gen_cmd->add_option("--gen", gen_kind, "uniform | corner | gauss")->capture_default_str();
  gen_cmd->add_option("--robots", gen_robots, "robot count")->required();
  gen_cmd->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--sigma", gen_sigma, "gauss spread")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "output .scen path")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
  std::string solve_scen, solve_solver = "ecbs:1.5", solve_out, solve_trace, solve_db;
  double solve_timeout = 60;
  SolverFlags solve_flags;
  solve_cmd->add_option("--scen", solve_scen, "instance .scen file")->required();
  solve_cmd->add_option("--solver", solve_solver, "cbs | ecbs:W | dcbs | ddm | scbs, with /key=value overrides")
      ->capture_default_str();
  solve_cmd->add_option("--timeout", solve_timeout, "wall-clock limit in seconds")->capture_default_str();
  solve_cmd->add_option("--db", solve_db, std::string("primitive database file (default: $") + DbBundle::kEnvVar + ")");
  solve_cmd->add_option("--out", solve_out, "write the plan here");
  solve_cmd->add_option("--trace", solve_trace, "write the NOC trace CSV here");
  solve_flags.attach(solve_cmd);

  // validate
  auto* val_cmd = app.add_subcommand("validate", "check a plan file against an instance");
  std::string val_scen, val_plan;
  val_cmd->add_option("--scen", val_scen, "instance .scen file")->required();
  val_cmd->add_option("--plan", val_plan, "plan file")->required();

  // db-gen
  auto* db_cmd = app.add_subcommand("db-gen", "build the 2x3 and 3x3 motion-primitive database");
  std::string db_out;
  int db_kmax = -1;
  unsigned db_threads = std::max(1u, std::thread::hardware_concurrency());
  db_cmd->add_option("--out", db_out, "output database file")->required();
  db_cmd->add_option("--k-max", db_kmax, "largest robot count to precompute (-1: all)")->capture_default_str();
  db_cmd->add_option("--threads", db_threads, "worker threads")->capture_default_str();
  bool db_keep = false;
  db_cmd->add_flag("--keep-existing", db_keep, "leave an existing readable database in place");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a solver matrix over generated instances");
  std::vector<std::string> bench_maps;
  std::string bench_gen = "uniform", bench_robots, bench_out, bench_db;
  std::vector<std::string> bench_solvers;
  std::size_t bench_reps = 20;
  double bench_timeout = 60, bench_sigma = 5.0;
  std::uint64_t bench_seed = 0;
  unsigned bench_jobs = 1;
  bool bench_trace = false;
  SolverFlags bench_flags;
  bench_cmd->add_option("--map", bench_maps, "MovingAI map(s)");
  bench_cmd->add_option("--gen", bench_gen, "uniform | corner | gauss")->capture_default_str();
  bench_cmd->add_option("--robots", bench_robots, "robot counts: 50,100 or lo:hi:step")->required();
  bench_cmd->add_option("--solvers", bench_solvers, "solver specs, comma separated")->required()->delimiter(',');
  bench_cmd->add_option("--reps", bench_reps, "repetitions per setting")->capture_default_str();
  bench_cmd->add_option("--timeout", bench_timeout, "per-run wall-clock limit in seconds")->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed, "seed base")->capture_default_str();
  bench_cmd->add_option("--sigma", bench_sigma, "gauss spread")->capture_default_str();
  bench_cmd->add_option("--jobs", bench_jobs, "parallel workers")->capture_default_str();
  bench_cmd->add_option("--db", bench_db, std::string("primitive database file (default: $") + DbBundle::kEnvVar + ")");
  bench_cmd->add_flag("--trace", bench_trace, "write per-run NOC traces under <out>/traces");
  bench_cmd->add_option("--out", bench_out, "output directory")->required();
  bench_flags.attach(bench_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (map_cmd->parsed()) {
      const GridMap m = map_kind == "warehouse" ? warehouse_map()
                        : map_kind == "empty"   ? GridMap::empty(map_w, map_h)
                                                : throw ConfigError("map kind must be warehouse or empty");
      std::ofstream out(map_out);
      if (!out) throw ConfigError("cannot write " + map_out);
      write_movingai_map(out, m);
      std::cout << map_out << ": " << m.width() << "x" << m.height() << ", " << m.free_count() << " free cells\n";
      return 0;
    }

    if (gen_cmd->parsed()) {
      BenchSuite suite;
      suite.generator = parse_generator(gen_kind);
      suite.seed_base = gen_seed;
      suite.sigma = gen_sigma;
      MapPtr map;
      if (suite.generator != Generator::Gauss) {
        if (gen_map.empty()) throw ConfigError("--map is required for " + gen_kind);
        map = open_map(gen_map);
      }
      const Instance inst = suite_instance(suite, map, gen_robots, 0);
      const DistanceOracle oracle(inst.map);
      save_instance(inst, gen_out, &oracle);
      std::cout << gen_out << ": " << inst.size() << " robots on " << inst.map->name() << "\n";
      return 0;
    }

    if (solve_cmd->parsed()) {
      const SolverSpec spec = SolverSpec::parse(solve_solver, solve_flags.base());
      const Instance inst = load_instance(solve_scen);
      check_instance(inst);
      const auto db = open_db(solve_db, spec.needs_db());
      const DistanceOracle oracle(inst.map);
      auto res = run_solver(spec, oracle, inst, db ? &*db : nullptr, solve_timeout, !solve_trace.empty());
      if (!solve_trace.empty()) {
        std::ofstream out(solve_trace);
        write_trace_csv(out, res.trace);
      }
      Plan plan = res.plan;
      const auto rec = make_record(inst, fs::path(solve_scen).stem().string(), spec, lower_bounds(oracle, inst),
                                   std::move(res));
      if (rec.solved() && !solve_out.empty()) {
        std::ofstream out(solve_out);
        write_plan(out, *inst.map, plan);
      }
      std::cout << outcome_json(rec).dump(2) << "\n";
      return rec.solved() ? 0 : 1;
    }

    if (val_cmd->parsed()) {
      const Instance inst = load_instance(val_scen);
      std::ifstream in(val_plan);
      if (!in) throw ConfigError("cannot open " + val_plan);
      const Plan plan = read_plan(in, *inst.map);
      const auto bad = validate_plan(*inst.map, inst, plan);
      for (const auto& v : bad)
        std::cout << to_string(v.kind) << " t=" << v.time << " robots=" << v.a << "," << v.b << "\n";
      if (bad.empty()) {
        const auto m = metrics(plan);
        std::cout << "valid: makespan " << m.makespan << ", soc " << m.soc << "\n";
      }
      return bad.empty() ? 0 : 1;
    }

    if (db_cmd->parsed()) {
      if (db_keep && fs::exists(db_out)) {
        try {
          DbBundle::load(db_out);
          std::cout << db_out << ": kept\n";
          return 0;
        } catch (const std::exception& e) {
          std::cerr << db_out << ": unreadable (" << e.what() << "), regenerating\n";
        }
      }
      const Stopwatch clock;
      const DbBundle db = DbBundle::generate(db_kmax, db_threads);
      db.save(db_out);
      std::cout << db_out << ": " << fs::file_size(db_out) << " bytes in " << clock.seconds() << " s\n";
      return 0;
    }

    if (bench_cmd->parsed()) {
      BenchSuite suite;
      suite.generator = parse_generator(bench_gen);
      suite.robots = parse_counts(bench_robots);
      suite.reps = bench_reps;
      suite.time_limit = bench_timeout;
      suite.seed_base = bench_seed;
      suite.sigma = bench_sigma;
      suite.jobs = bench_jobs;
      for (const auto& m : bench_maps) suite.maps.push_back(open_map(m));
      const SolverSpec base = bench_flags.base();
      std::vector<SolverSpec> solvers;
      bool need_db = false;
      for (const auto& s : bench_solvers) {
        solvers.push_back(SolverSpec::parse(s, base));
        need_db = need_db || solvers.back().needs_db();
      }
      suite.validate();
      const auto db = open_db(bench_db, need_db);
      fs::create_directories(bench_out);
      if (bench_trace) suite.trace_dir = fs::path(bench_out) / "traces";
      const auto csv_path = fs::path(bench_out) / "records.csv";
      std::ofstream csv(csv_path);
      if (!csv) throw ConfigError("cannot write " + csv_path.string());
      csv << kRecordHeader << '\n' << std::flush;
      const auto records = run_suite(suite, solvers, db ? &*db : nullptr, [&](const RunRecord& r) {
        write_record(csv, r);
        csv.flush();
        std::cerr << r.instance_id << " " << r.solver << " " << to_string(r.outcome) << " " << r.seconds << "s\n";
      });
      const auto rows = summarize(records);
      std::ofstream(fs::path(bench_out) / "summary.json") << summary_json(rows).dump(2) << '\n';
      for (const auto& r : rows) {
        std::cout << r.solver << " " << r.map << " " << r.generator << " n=" << r.robots << " success "
                  << r.success_rate;
        if (r.mean_mkpn_ratio)
          std::cout << " time " << *r.mean_seconds << " mkpn " << *r.mean_mkpn_ratio << " soc " << *r.mean_soc_ratio;
        std::cout << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInstance& e) {
    std::cerr << "invalid instance: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
