#pragma once

// Space-time single-robot search: plain A* and the focal variant used by the
// ECBS low level. States are (vertex, time); each step waits or moves to a
// free neighbor.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "deadline.hpp"
#include "grid.hpp"
#include "plan.hpp"

namespace densemapf {

enum class ConstraintKind { Vertex, Edge };

/// Forbids `robot` from being at v at `time` (vertex) or from moving u -> v
/// arriving at `time` (edge).
struct Constraint {
  int robot = 0;
  ConstraintKind kind = ConstraintKind::Vertex;
  VertexId u = kNoVertex;
  VertexId v = kNoVertex;
  int time = 0;

  static Constraint vertex(int robot, VertexId v, int t) { return {robot, ConstraintKind::Vertex, kNoVertex, v, t}; }
  static Constraint edge(int robot, VertexId u, VertexId v, int t) { return {robot, ConstraintKind::Edge, u, v, t}; }

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Constraints of a single robot with O(1) membership tests.
class ConstraintSet {
 public:
  void add(const Constraint& c) {
    if (c.kind == ConstraintKind::Vertex) {
      vertex_.insert(key(c.v, c.time));
      auto [it, inserted] = last_vertex_time_.try_emplace(c.v, c.time);
      if (!inserted) it->second = std::max(it->second, c.time);
    } else {
      edge_.insert(edge_key(c.u, c.v, c.time));
    }
    max_time_ = std::max(max_time_, c.time);
    ++size_;
  }

  bool vertex_blocked(VertexId v, int t) const { return !vertex_.empty() && vertex_.count(key(v, t)); }
  bool edge_blocked(VertexId u, VertexId v, int t) const {
    return !edge_.empty() && edge_.count(edge_key(u, v, t));
  }
  /// Latest time of a vertex constraint on v, or -1.
  int last_vertex_constraint(VertexId v) const {
    auto it = last_vertex_time_.find(v);
    return it == last_vertex_time_.end() ? -1 : it->second;
  }
  int max_time() const { return max_time_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

 private:
  static std::uint64_t key(VertexId v, int t) { return (std::uint64_t(std::uint32_t(t)) << 32) | std::uint32_t(v); }
  static std::uint64_t edge_key(VertexId u, VertexId v, int t) {
    return (std::uint64_t(std::uint32_t(t)) << 42) | (std::uint64_t(std::uint32_t(u)) << 21) | std::uint32_t(v);
  }

  std::unordered_set<std::uint64_t> vertex_;
  std::unordered_set<std::uint64_t> edge_;
  std::unordered_map<VertexId, int> last_vertex_time_;
  int max_time_ = 0;
  std::size_t size_ = 0;
};

/// Occupancy of other robots' paths, used to count conflicts of a candidate
/// path. Robots stay at their last vertex after their path ends.
class ConflictTable {
 public:
  explicit ConflictTable(const GridMap& map)
      : cells_(map.cell_count()), row_(map.width()), parked_(static_cast<std::size_t>(map.cell_count())) {}

  void add(const Path& p) { apply(p, +1); }
  void remove(const Path& p) { apply(p, -1); }

  /// Number of timesteps with explicit entries; beyond it only parked robots remain.
  int horizon() const { return horizon_; }

  int vertex_count(VertexId v, int t) const {
    int n = t < horizon_ ? occ_[idx(v, t)] : 0;
    for (int since : parked_[static_cast<std::size_t>(v)])
      if (t >= since) ++n;
    return n;
  }

  /// Robots moving to -> from arriving at t, i.e. swapping with a from -> to move.
  int edge_count(VertexId from, VertexId to, int t) const {
    if (t <= 0 || t >= horizon_) return 0;
    return moves_[edge_idx(to, direction_of(to, from), t)];
  }

  /// Conflicts of `p` against the table over the padded horizon.
  int conflicts_of(const Path& p) const {
    int n = 0;
    const int end = std::max(static_cast<int>(p.size()), horizon_);
    for (int t = 0; t < end; ++t) {
      const VertexId v = at(p, std::size_t(t));
      n += vertex_count(v, t);
      if (t > 0) {
        const VertexId u = at(p, std::size_t(t - 1));
        if (u != v) n += edge_count(u, v, t);
      }
    }
    return n;
  }

  /// after[t] = sum of vertex_count(v, t') over t < t' < horizon, i.e. what a
  /// path parked at v from t onwards adds in conflicts_of.
  std::vector<int> visits_after(VertexId v) const {
    std::vector<int> after(static_cast<std::size_t>(std::max(horizon_, 1)), 0);
    for (int t = horizon_ - 2; t >= 0; --t)
      after[static_cast<std::size_t>(t)] = after[static_cast<std::size_t>(t) + 1] + vertex_count(v, t + 1);
    return after;
  }

 private:
  std::size_t idx(VertexId v, int t) const { return std::size_t(t) * std::size_t(cells_) + std::size_t(v); }
  std::size_t edge_idx(VertexId from, int d, int t) const {
    return (std::size_t(t) * std::size_t(cells_) + std::size_t(from)) * 4 + std::size_t(d);
  }

  // Matches the kMoves order E, W, N, S for adjacent ids.
  int direction_of(VertexId a, VertexId b) const {
    const int diff = b - a;
    if (diff == 1) return 0;
    if (diff == -1) return 1;
    return diff == row_ ? 2 : 3;
  }

  void grow(int h) {
    if (h <= horizon_) return;
    occ_.resize(std::size_t(h) * std::size_t(cells_), 0);
    moves_.resize(std::size_t(h) * std::size_t(cells_) * 4, 0);
    horizon_ = h;
  }

  void apply(const Path& p, int delta) {
    if (p.empty()) return;
    grow(static_cast<int>(p.size()));
    for (std::size_t t = 0; t < p.size(); ++t) {
      occ_[idx(p[t], int(t))] += delta;
      if (t > 0 && p[t] != p[t - 1]) moves_[edge_idx(p[t - 1], direction_of(p[t - 1], p[t]), int(t))] += delta;
    }
    auto& park = parked_[static_cast<std::size_t>(p.back())];
    if (delta > 0) {
      park.push_back(static_cast<int>(p.size()));
    } else if (auto it = std::find(park.begin(), park.end(), static_cast<int>(p.size())); it != park.end()) {
      park.erase(it);
    }
  }

  int cells_;
  int row_;
  int horizon_ = 0;
  std::vector<int> occ_;
  std::vector<int> moves_;
  std::vector<std::vector<int>> parked_;
};

/// Inputs of one single-robot search.
struct SearchContext {
  const DistanceOracle* oracle = nullptr;
  VertexId start = kNoVertex;
  VertexId goal = kNoVertex;
  const ConstraintSet* constraints = nullptr;
  const ConflictTable* others = nullptr;
  int horizon_cap = 0;
  const Deadline* deadline = nullptr;
};

struct FocalResult {
  Path path;
  int f_min = 0;
  int conflicts = 0;
  std::size_t expansions = 0;
};

namespace detail {

struct SpaceTimeNode {
  VertexId v;
  int t;
  int f;
  int conflicts;
  int key_conflicts;
  int parent;
  bool open;
};

inline constexpr std::size_t kDeadlineStride = 10000;

inline int goal_gate(const SearchContext& ctx) {
  return ctx.constraints ? ctx.constraints->last_vertex_constraint(ctx.goal) : -1;
}

inline bool blocked(const SearchContext& ctx, VertexId from, VertexId to, int t) {
  if (!ctx.constraints || ctx.constraints->empty()) return false;
  if (ctx.constraints->vertex_blocked(to, t)) return true;
  return from != to && ctx.constraints->edge_blocked(from, to, t);
}

inline Path reconstruct(const std::vector<SpaceTimeNode>& nodes, int idx) {
  Path p;
  for (int k = idx; k >= 0; k = nodes[static_cast<std::size_t>(k)].parent) p.push_back(nodes[static_cast<std::size_t>(k)].v);
  std::reverse(p.begin(), p.end());
  return p;
}

}  // namespace detail

/// Heuristic: distance to goal, but never earlier than the step after the last
/// vertex constraint on the goal.
inline int space_time_h(const SearchContext& ctx, VertexId v, int t, int gate) {
  return std::max(ctx.oracle->dist(v, ctx.goal), gate + 1 - t);
}

/// Minimum-arrival constrained path, or nothing within the horizon cap.
inline std::optional<Path> astar(const SearchContext& ctx) {
  using detail::SpaceTimeNode;
  const auto& map = ctx.oracle->map();
  if (ctx.oracle->dist(ctx.start, ctx.goal) == DistanceOracle::kUnreachable) return std::nullopt;
  const int gate = detail::goal_gate(ctx);
  std::vector<SpaceTimeNode> nodes;
  std::unordered_map<std::uint64_t, int> index;
  // (f, -g, id)
  std::set<std::tuple<int, int, int>> open;
  auto key = [&](VertexId v, int t) { return std::uint64_t(t) * std::uint64_t(map.cell_count()) + std::uint64_t(v); };
  nodes.push_back({ctx.start, 0, space_time_h(ctx, ctx.start, 0, gate), 0, 0, -1, true});
  index[key(ctx.start, 0)] = 0;
  open.insert({nodes[0].f, 0, 0});
  std::size_t expansions = 0;
  while (!open.empty()) {
    if (ctx.deadline && ++expansions % detail::kDeadlineStride == 0) ctx.deadline->check();
    const int cur = std::get<2>(*open.begin());
    open.erase(open.begin());
    auto n = nodes[static_cast<std::size_t>(cur)];
    nodes[static_cast<std::size_t>(cur)].open = false;
    if (n.v == ctx.goal && n.t > gate) return detail::reconstruct(nodes, cur);
    if (n.t + 1 > ctx.horizon_cap) continue;
    auto consider = [&](VertexId w) {
      if (detail::blocked(ctx, n.v, w, n.t + 1)) return;
      const auto k = key(w, n.t + 1);
      if (index.count(k)) return;
      const int id = static_cast<int>(nodes.size());
      nodes.push_back({w, n.t + 1, n.t + 1 + space_time_h(ctx, w, n.t + 1, gate), 0, 0, cur, true});
      index.emplace(k, id);
      open.insert({nodes.back().f, -(n.t + 1), id});
    };
    consider(n.v);
    for (VertexId w : map.adjacent(n.v))
      if (w != kNoVertex) consider(w);
  }
  return std::nullopt;
}

/// Focal search with suboptimality factor w1. FOCAL holds the OPEN nodes with
/// f <= w1 * f_min and is ordered by conflicts against `ctx.others`, then by
/// larger g. Returns the path and the f_min at the time the goal was popped.
inline std::optional<FocalResult> focal_astar(const SearchContext& ctx, double w1) {
  using detail::SpaceTimeNode;
  if (w1 < 1.0) throw std::invalid_argument("focal weight must be >= 1");
  const auto& map = ctx.oracle->map();
  if (ctx.oracle->dist(ctx.start, ctx.goal) == DistanceOracle::kUnreachable) return std::nullopt;
  const int gate = detail::goal_gate(ctx);
  const ConflictTable* cat = ctx.others;
  std::vector<int> goal_after;
  if (cat) goal_after = cat->visits_after(ctx.goal);
  auto goal_penalty = [&](int t) {
    if (!cat) return 0;
    return goal_after[std::min<std::size_t>(std::size_t(t), goal_after.size() - 1)];
  };

  std::vector<SpaceTimeNode> nodes;
  nodes.reserve(256);
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(512);
  std::set<std::pair<int, int>> open;                    // (f, id)
  std::set<std::tuple<int, int, int, int>> focal;        // (conflicts, -g, f, id)
  auto key = [&](VertexId v, int t) { return std::uint64_t(t) * std::uint64_t(map.cell_count()) + std::uint64_t(v); };
  auto focal_key = [&](int id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    return std::make_tuple(n.key_conflicts, -n.t, n.f, id);
  };
  auto eligible = [&](VertexId v, int t) { return v == ctx.goal && t > gate; };

  {
    const int c0 = cat ? cat->vertex_count(ctx.start, 0) : 0;
    const int kc = eligible(ctx.start, 0) ? c0 + goal_penalty(0) : c0;
    nodes.push_back({ctx.start, 0, space_time_h(ctx, ctx.start, 0, gate), c0, kc, -1, true});
  }
  index[key(ctx.start, 0)] = 0;
  open.insert({nodes[0].f, 0});
  focal.insert(focal_key(0));
  int best_f = nodes[0].f;
  std::size_t expansions = 0;
  constexpr double kEps = 1e-9;

  while (!open.empty()) {
    if (ctx.deadline && ++expansions % detail::kDeadlineStride == 0) ctx.deadline->check();
    const int new_best = open.begin()->first;
    if (new_best > best_f) {
      const double old_bound = w1 * best_f, new_bound = w1 * new_best;
      for (auto it = open.lower_bound({static_cast<int>(old_bound) , -1}); it != open.end(); ++it) {
        if (it->first > new_bound + kEps) break;
        if (it->first > old_bound + kEps) focal.insert(focal_key(it->second));
      }
      best_f = new_best;
    }
    const int cur = std::get<3>(*focal.begin());
    focal.erase(focal.begin());
    auto n = nodes[static_cast<std::size_t>(cur)];
    open.erase({n.f, cur});
    nodes[static_cast<std::size_t>(cur)].open = false;

    if (eligible(n.v, n.t))
      return FocalResult{detail::reconstruct(nodes, cur), best_f, n.key_conflicts, expansions};
    if (n.t + 1 > ctx.horizon_cap) continue;

    const double bound = w1 * best_f + kEps;
    auto consider = [&](VertexId w) {
      const int t = n.t + 1;
      if (detail::blocked(ctx, n.v, w, t)) return;
      int c = n.conflicts;
      if (cat) {
        c += cat->vertex_count(w, t);
        if (w != n.v) c += cat->edge_count(n.v, w, t);
      }
      const int kc = eligible(w, t) ? c + goal_penalty(t) : c;
      const auto k = key(w, t);
      if (auto it = index.find(k); it != index.end()) {
        auto& old = nodes[static_cast<std::size_t>(it->second)];
        if (!old.open || kc >= old.key_conflicts) return;
        const bool in_focal = focal.erase(focal_key(it->second)) > 0;
        old.conflicts = c;
        old.key_conflicts = kc;
        old.parent = cur;
        if (in_focal) focal.insert(focal_key(it->second));
        return;
      }
      const int id = static_cast<int>(nodes.size());
      nodes.push_back({w, t, t + space_time_h(ctx, w, t, gate), c, kc, cur, true});
      index.emplace(k, id);
      open.insert({nodes.back().f, id});
      if (nodes.back().f <= bound) focal.insert(focal_key(id));
    };
    consider(n.v);
    for (VertexId w : map.adjacent(n.v))
      if (w != kNoVertex) consider(w);
  }
  return std::nullopt;
}

}  // namespace densemapf
