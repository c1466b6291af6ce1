#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "deadline.hpp"
#include "ecbs.hpp"
#include "grid.hpp"
#include "instance.hpp"
#include "plan.hpp"
#include "random.hpp"
#include "unlabeled.hpp"

namespace densemapf {

/// Local density ρ_l(v) is measured over the W x W window centred at v.
struct DensityParams {
  int window = 5;
  double rho = 0.5;

  void validate() const {
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("density window must be odd and positive");
    if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("preferred density must lie in (0, 1]");
  }
};

/// Window geometry: free-cell counts per centre and window membership.
class DensityWindow {
 public:
  DensityWindow(const GridMap& map, int window) : map_(map), r_(window / 2) {
    area_.assign(std::size_t(map.cell_count()), 0);
    for (VertexId v : map.free_vertices())
      for_each(v, [&](VertexId) { ++area_[std::size_t(v)]; });
  }

  int radius() const { return r_; }
  int area(VertexId v) const { return area_[std::size_t(v)]; }

  /// Calls fn for every free cell in the window around v (v included).
  template <class Fn>
  void for_each(VertexId v, Fn&& fn) const {
    const Vertex c = map_.vertex(v);
    for (int j = c.j - r_; j <= c.j + r_; ++j)
      for (int i = c.i - r_; i <= c.i + r_; ++i)
        if (map_.is_free(Vertex{i, j})) fn(map_.id(Vertex{i, j}));
  }

 private:
  const GridMap& map_;
  int r_;
  std::vector<int> area_;
};

/// Robots in the window of v over free cells in that window; cells outside the map don't count.
inline double local_density(const GridMap& map, std::span<const VertexId> config, VertexId v, int window) {
  if (!map.is_free(v)) throw InvalidVertex(map.vertex(v));
  std::vector<std::uint8_t> occupied(std::size_t(map.cell_count()), 0);
  for (VertexId u : config) occupied[std::size_t(u)] = 1;
  const DensityWindow win(map, window);
  int robots = 0;
  win.for_each(v, [&](VertexId u) { robots += occupied[std::size_t(u)]; });
  return double(robots) / double(win.area(v));
}

struct SparsifyStats {
  std::size_t fallbacks = 0;
};

/// Greedy sparsification of `config` towards `other` (labels match). Robots are
/// taken in `order` (index order when empty); each claims the first vertex of a
/// best-first search from its own vertex, ordered by dist(v, s_i) + dist(v, g_i),
/// that is unclaimed and keeps every window containing it at or below ρ*.
/// When no such vertex exists the best unclaimed vertex is used and counted as a fallback.
inline Configuration sparsify_config(const DistanceOracle& oracle, const Configuration& config,
                                     const Configuration& other, const DensityParams& params,
                                     std::span<const std::size_t> order = {}, SparsifyStats* stats = nullptr) {
  params.validate();
  if (config.size() != other.size()) throw std::invalid_argument("configurations differ in size");
  const GridMap& map = oracle.map();
  const DensityWindow win(map, params.window);
  std::vector<int> count(std::size_t(map.cell_count()), 0);
  std::vector<std::uint8_t> claimed(std::size_t(map.cell_count()), 0);
  std::vector<int> seen(std::size_t(map.cell_count()), -1);
  Configuration out(config.size(), kNoVertex);

  auto admissible = [&](VertexId u) {
    bool ok = true;
    win.for_each(u, [&](VertexId x) {
      if (ok && (claimed[std::size_t(x)] || x == u) &&
          double(count[std::size_t(x)] + 1) > params.rho * double(win.area(x)) + 1e-9)
        ok = false;
    });
    return ok;
  };
  auto claim = [&](VertexId u) {
    claimed[std::size_t(u)] = 1;
    win.for_each(u, [&](VertexId x) { ++count[std::size_t(x)]; });
  };

  std::vector<std::size_t> seq(order.begin(), order.end());
  if (seq.empty())
    for (std::size_t k = 0; k < config.size(); ++k) seq.push_back(k);
  using Item = std::tuple<int, int, VertexId>;  // f, dist to own vertex, vertex
  for (std::size_t r : seq) {
    const VertexId s = config[r], g = other[r];
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    open.push({oracle.dist(s, g), 0, s});
    seen[std::size_t(s)] = int(r);
    VertexId chosen = kNoVertex;
    std::optional<Item> fallback;
    while (!open.empty()) {
      const Item top = open.top();
      open.pop();
      const VertexId v = std::get<2>(top);
      if (!claimed[std::size_t(v)]) {
        if (admissible(v)) {
          chosen = v;
          break;
        }
        if (!fallback || top < *fallback) fallback = top;
      }
      for (VertexId w : map.adjacent(v))
        if (w != kNoVertex && seen[std::size_t(w)] != int(r)) {
          seen[std::size_t(w)] = int(r);
          const int ds = oracle.dist(w, s);
          open.push({ds + oracle.dist(w, g), ds, w});
        }
    }
    if (chosen == kNoVertex) {
      if (!fallback) throw InvalidInstance("no free vertex left for sparsification");
      chosen = std::get<2>(*fallback);
      if (stats) ++stats->fallbacks;
    }
    claim(chosen);
    out[r] = chosen;
  }
  return out;
}

/// Phases padded to a common horizon and run back to back.
inline Plan synchronized_concat(const std::vector<Plan>& phases) {
  if (phases.empty()) return {};
  Plan out(phases.front().size());
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const std::size_t H = horizon(phases[k]);
    for (std::size_t r = 0; r < out.size(); ++r)
      for (std::size_t t = k == 0 ? 0 : 1; t <= H; ++t) out[r].push_back(at(phases[k][r], t));
  }
  return out;
}

/// Merges consecutive phase plans by replaying every robot's vertex sequence
/// as early as possible: a robot enters its next vertex once every earlier
/// visitor of that vertex (in the synchronized schedule) has come and gone and
/// the vertex is empty or being vacated in the same step.
inline Plan mcp_merge(const std::vector<Plan>& phases) {
  if (phases.empty()) throw std::invalid_argument("no phases to merge");
  const std::size_t n = phases.front().size();
  for (std::size_t k = 0; k < phases.size(); ++k) {
    if (phases[k].size() != n) throw std::invalid_argument("phases disagree on the robot count");
    for (const auto& p : phases[k])
      if (p.empty()) throw std::invalid_argument("phase holds an empty path");
    if (k > 0)
      for (std::size_t r = 0; r < n; ++r)
        if (phases[k - 1][r].back() != phases[k][r].front())
          throw std::invalid_argument("phase " + std::to_string(k) + " does not start where phase " +
                                      std::to_string(k - 1) + " ends for robot " + std::to_string(r));
  }
  std::vector<Plan> moving;
  for (const auto& p : phases)
    if (horizon(p) > 0) moving.push_back(p);
  if (moving.empty()) return phases.front();
  if (moving.size() == 1) return moving.front();

  const Plan sync = synchronized_concat(moving);
  VertexId max_id = 0;
  for (const auto& p : sync)
    for (VertexId v : p) max_id = std::max(max_id, v);
  const auto cells = std::size_t(max_id) + 1;

  std::vector<Path> seq(n);
  std::vector<std::vector<int>> visits(cells);
  const std::size_t H = horizon(sync);
  for (std::size_t t = 0; t <= H; ++t)
    for (std::size_t r = 0; r < n; ++r) {
      const VertexId v = at(sync[r], t);
      if (t > 0 && v == at(sync[r], t - 1)) continue;
      seq[r].push_back(v);
      visits[std::size_t(v)].push_back(int(r));
    }

  std::vector<std::size_t> pos(n, 0), next_visit(cells, 0);
  std::vector<int> occupant(cells, -1);
  std::size_t budget = 0;
  for (std::size_t r = 0; r < n; ++r) {
    occupant[std::size_t(seq[r][0])] = int(r);
    next_visit[std::size_t(seq[r][0])] = 1;
    budget += seq[r].size();
  }
  Plan out(n);
  for (std::size_t r = 0; r < n; ++r) out[r].push_back(seq[r][0]);

  std::vector<char> go(n);
  auto target = [&](std::size_t r) { return seq[r][pos[r] + 1]; };
  for (std::size_t step = 0;; ++step) {
    bool pending = false;
    for (std::size_t r = 0; r < n; ++r) {
      go[r] = 0;
      if (pos[r] + 1 >= seq[r].size()) continue;
      pending = true;
      const auto v = std::size_t(target(r));
      go[r] = next_visit[v] < visits[v].size() && visits[v][next_visit[v]] == int(r);
    }
    if (!pending) break;
    if (step > budget) throw std::logic_error("merge schedule does not progress");
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t r = 0; r < n; ++r) {
        if (!go[r]) continue;
        const int o = occupant[std::size_t(target(r))];
        const bool blocked = o >= 0 && (!go[std::size_t(o)] || target(std::size_t(o)) == seq[r][pos[r]]);
        if (blocked) {
          go[r] = 0;
          changed = true;
        }
      }
    }
    bool moved = false;
    for (std::size_t r = 0; r < n; ++r)
      if (go[r]) occupant[std::size_t(seq[r][pos[r]])] = -1;
    for (std::size_t r = 0; r < n; ++r) {
      if (go[r]) {
        const auto v = std::size_t(target(r));
        occupant[v] = int(r);
        ++next_visit[v];
        ++pos[r];
        moved = true;
      }
      out[r].push_back(seq[r][pos[r]]);
    }
    if (!moved) throw std::logic_error("merge schedule deadlocked");
  }
  trim(out);
  return out;
}

struct ScbsOptions {
  DensityParams density;
  double w1 = 1.5;
  TieBreak tiebreak = TieBreak::bySoc;
  double time_limit = 60.0;
  std::optional<std::uint64_t> order_seed;  // shuffles the sparsification order when set
};

struct ScbsResult {
  SolveStatus status = SolveStatus::Exhausted;
  Plan plan;
  Configuration start_mid;  // labeled intermediate start configuration
  Configuration goal_mid;   // labeled intermediate goal configuration
  std::vector<Plan> phases;
  std::size_t sparsify_fallbacks = 0;
  std::size_t middle_expansions = 0;
  double seconds = 0;

  bool solved() const { return status == SolveStatus::Solved; }
};

/// Sparsify both ends, route there by unlabeled flow, solve the sparse
/// labeled middle with ECBS and merge the three phases.
inline ScbsResult solve_scbs(const DistanceOracle& oracle, const Instance& inst, const ScbsOptions& opts = {}) {
  check_instance(inst);
  opts.density.validate();
  const Stopwatch clock;
  const Deadline deadline(opts.time_limit);
  ScbsResult res;
  std::vector<std::size_t> order;
  if (opts.order_seed) {
    for (std::size_t r = 0; r < inst.size(); ++r) order.push_back(r);
    Rng rng(mix_seed(*opts.order_seed));
    shuffle(order, rng);
  }
  try {
    SparsifyStats stats;
    const auto start_set = sparsify_config(oracle, inst.starts, inst.goals, opts.density, order, &stats);
    deadline.check();
    const auto goal_set = sparsify_config(oracle, inst.goals, inst.starts, opts.density, order, &stats);
    res.sparsify_fallbacks = stats.fallbacks;
    deadline.check();

    const auto first = solve_unlabeled({inst.map, inst.starts, start_set}, &deadline);
    res.start_mid = first.reached;

    // Last phase runs from the sparse goal set onto the real goals; whichever
    // robot owns the goal reached from a sparse vertex must stand there.
    const auto last = solve_unlabeled({inst.map, goal_set, inst.goals}, &deadline);
    res.goal_mid.assign(inst.size(), kNoVertex);
    Plan last_plan(inst.size());
    for (std::size_t k = 0; k < goal_set.size(); ++k) {
      const auto r = std::size_t(last.assignment[k]);
      res.goal_mid[r] = goal_set[k];
      last_plan[r] = last.plan[k];
    }

    Instance middle = inst;
    middle.starts = res.start_mid;
    middle.goals = res.goal_mid;
    EcbsOptions eo;
    eo.w1 = opts.w1;
    eo.tiebreak = opts.tiebreak;
    eo.time_limit = std::max(0.0, deadline.remaining_seconds());
    const auto mid = solve_ecbs(oracle, middle, eo);
    res.middle_expansions = mid.expansions;
    if (!mid.solved()) {
      res.status = mid.status;
      res.seconds = clock.seconds();
      return res;
    }
    res.phases = {first.plan, mid.plan, std::move(last_plan)};
    res.plan = mcp_merge(res.phases);
    res.status = SolveStatus::Solved;
  } catch (const Timeout&) {
    res.status = SolveStatus::Timeout;
  }
  res.seconds = clock.seconds();
  return res;
}

}  // namespace densemapf
