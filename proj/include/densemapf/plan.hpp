#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grid.hpp"
#include "instance.hpp"

namespace densemapf {

/// Timed vertex sequence p^0..p^T. A robot stays at its last vertex afterwards.
using Path = std::vector<VertexId>;
using Plan = std::vector<Path>;

/// Position at time t, holding the last vertex once the path has ended.
inline VertexId at(const Path& p, std::size_t t) { return t < p.size() ? p[t] : p.back(); }

inline std::size_t horizon(const Plan& plan) {
  std::size_t h = 0;
  for (const auto& p : plan) h = std::max(h, p.size());
  return h == 0 ? 0 : h - 1;
}

enum class ConflictKind { Vertex, Edge };

/// Collision between robots a < b at time t. For a vertex conflict both are
/// at `v`; for an edge conflict a moves u -> v while b moves v -> u.
struct Conflict {
  int time = 0;
  int a = 0;
  int b = 0;
  ConflictKind kind = ConflictKind::Vertex;
  VertexId u = kNoVertex;
  VertexId v = kNoVertex;

  friend bool operator==(const Conflict&, const Conflict&) = default;
};

namespace detail {

/// Walks every (t, pair) collision of a padded plan in time order; pairs at
/// one timestep are visited in lexicographic order. `fn` returns false to stop.
template <class Fn>
void for_each_conflict(const Plan& plan, Fn&& fn) {
  const std::size_t T = horizon(plan);
  VertexId max_id = 0;
  for (const auto& p : plan)
    for (VertexId v : p) max_id = std::max(max_id, v);
  std::vector<std::vector<int>> occupants(static_cast<std::size_t>(max_id) + 1);
  std::vector<VertexId> touched;
  std::vector<Conflict> found;
  for (std::size_t t = 0; t <= T; ++t) {
    found.clear();
    touched.clear();
    for (int r = 0; r < static_cast<int>(plan.size()); ++r) {
      const VertexId v = at(plan[static_cast<std::size_t>(r)], t);
      auto& occ = occupants[static_cast<std::size_t>(v)];
      if (occ.empty()) touched.push_back(v);
      for (int other : occ) found.push_back({int(t), other, r, ConflictKind::Vertex, v, v});
      occ.push_back(r);
    }
    if (t > 0) {
      // a: u -> v with b: v -> u. Look up robots that were at v at t-1 by scanning occupants at t of u.
      for (int r = 0; r < static_cast<int>(plan.size()); ++r) {
        const VertexId from = at(plan[static_cast<std::size_t>(r)], t - 1);
        const VertexId to = at(plan[static_cast<std::size_t>(r)], t);
        if (from == to) continue;
        for (int other : occupants[static_cast<std::size_t>(from)]) {
          if (other <= r) continue;
          if (at(plan[static_cast<std::size_t>(other)], t - 1) == to)
            found.push_back({int(t), r, other, ConflictKind::Edge, from, to});
        }
      }
    }
    for (VertexId v : touched) occupants[static_cast<std::size_t>(v)].clear();
    if (found.empty()) continue;
    std::sort(found.begin(), found.end(), [](const Conflict& x, const Conflict& y) {
      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    for (const auto& c : found)
      if (!fn(c)) return;
  }
}

}  // namespace detail

/// Number of (t, pair) vertex collisions plus edge swaps over the padded plan.
inline std::size_t count_conflicts(const Plan& plan) {
  std::size_t n = 0;
  detail::for_each_conflict(plan, [&](const Conflict&) {
    ++n;
    return true;
  });
  return n;
}

/// Earliest conflict; ties at one timestep go to the smallest robot pair.
inline std::optional<Conflict> first_conflict(const Plan& plan) {
  std::optional<Conflict> out;
  detail::for_each_conflict(plan, [&](const Conflict& c) {
    out = c;
    return false;
  });
  return out;
}

inline std::vector<Conflict> all_conflicts(const Plan& plan) {
  std::vector<Conflict> out;
  detail::for_each_conflict(plan, [&](const Conflict& c) {
    out.push_back(c);
    return true;
  });
  return out;
}

enum class ViolationKind {
  RobotCount,
  EmptyPath,
  InvalidVertex,
  WrongStart,
  WrongGoal,
  Teleport,
  VertexCollision,
  EdgeCollision,
};

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::RobotCount: return "robot-count";
    case ViolationKind::EmptyPath: return "empty-path";
    case ViolationKind::InvalidVertex: return "invalid-vertex";
    case ViolationKind::WrongStart: return "wrong-start";
    case ViolationKind::WrongGoal: return "wrong-goal";
    case ViolationKind::Teleport: return "teleport";
    case ViolationKind::VertexCollision: return "vertex-collision";
    case ViolationKind::EdgeCollision: return "edge-collision";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  int time = -1;
  int a = -1;
  int b = -1;
};

/// Every feasibility and collision violation of `plan` for `inst`; empty means valid.
inline std::vector<Violation> validate_plan(const GridMap& map, const Instance& inst, const Plan& plan) {
  std::vector<Violation> out;
  if (plan.size() != inst.size()) {
    out.push_back({ViolationKind::RobotCount});
    return out;
  }
  bool feasible = true;
  for (int r = 0; r < static_cast<int>(plan.size()); ++r) {
    const Path& p = plan[static_cast<std::size_t>(r)];
    if (p.empty()) {
      out.push_back({ViolationKind::EmptyPath, -1, r});
      feasible = false;
      continue;
    }
    bool vertices_ok = true;
    for (std::size_t t = 0; t < p.size(); ++t)
      if (!map.is_free(p[t])) {
        out.push_back({ViolationKind::InvalidVertex, int(t), r});
        vertices_ok = false;
      }
    if (!vertices_ok) {
      feasible = false;
      continue;
    }
    if (p.front() != inst.starts[static_cast<std::size_t>(r)]) out.push_back({ViolationKind::WrongStart, 0, r});
    if (p.back() != inst.goals[static_cast<std::size_t>(r)])
      out.push_back({ViolationKind::WrongGoal, int(p.size()) - 1, r});
    for (std::size_t t = 1; t < p.size(); ++t)
      if (!map.adjacent_or_equal(p[t - 1], p[t])) out.push_back({ViolationKind::Teleport, int(t), r});
  }
  if (!feasible) return out;
  detail::for_each_conflict(plan, [&](const Conflict& c) {
    out.push_back({c.kind == ConflictKind::Vertex ? ViolationKind::VertexCollision
                                                   : ViolationKind::EdgeCollision,
                   c.time, c.a, c.b});
    return true;
  });
  return out;
}

/// Arrival time: first index of the path's final run at its last vertex.
inline std::size_t arrival_time(const Path& p) {
  if (p.empty()) return 0;
  std::size_t t = p.size() - 1;
  while (t > 0 && p[t - 1] == p.back()) --t;
  return t;
}

struct Metrics {
  std::size_t makespan = 0;
  std::size_t soc = 0;
};

/// Makespan and sum-of-cost, each robot's goal being its path's last vertex.
inline Metrics metrics(const Plan& plan) {
  Metrics m;
  for (const auto& p : plan) {
    const std::size_t ti = arrival_time(p);
    m.makespan = std::max(m.makespan, ti);
    m.soc += ti;
  }
  return m;
}

struct LowerBounds {
  std::size_t makespan = 0;
  std::size_t soc = 0;
};

inline LowerBounds lower_bounds(const DistanceOracle& oracle, const Instance& inst) {
  LowerBounds lb;
  for (std::size_t r = 0; r < inst.size(); ++r) {
    const auto d = static_cast<std::size_t>(oracle.dist(inst.starts[r], inst.goals[r]));
    lb.makespan = std::max(lb.makespan, d);
    lb.soc += d;
  }
  return lb;
}

/// Drops trailing timesteps at which no robot moves.
inline void trim(Plan& plan) {
  const std::size_t T = metrics(plan).makespan;
  for (auto& p : plan)
    if (p.size() > T + 1) p.resize(T + 1);
}

}  // namespace densemapf
