#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "deadline.hpp"
#include "grid.hpp"
#include "instance.hpp"
#include "plan.hpp"

namespace densemapf {

/// Directed integral network solved with Dinic's algorithm.
class FlowNetwork {
 public:
  struct Arc {
    int to;
    int cap;
    int rev;
    int flow = 0;
  };

  explicit FlowNetwork(int nodes = 0) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_node() {
    adj_.emplace_back();
    return int(adj_.size()) - 1;
  }
  int node_count() const { return int(adj_.size()); }

  /// Returns the arc's index in `arcs(from)`.
  int add_arc(int from, int to, int cap) {
    auto& a = adj_[std::size_t(from)];
    auto& b = adj_[std::size_t(to)];
    a.push_back({to, cap, int(b.size()) + (from == to ? 1 : 0)});
    b.push_back({from, 0, int(a.size()) - 1});
    return int(a.size()) - 1;
  }

  const std::vector<Arc>& arcs(int node) const { return adj_[std::size_t(node)]; }

  /// Pushes at most `limit` more units from s to t and returns the total pushed by this call.
  long long max_flow(int s, int t, long long limit = std::numeric_limits<long long>::max(),
                     const Deadline* deadline = nullptr) {
    long long total = 0;
    if (s == t) return 0;
    while (total < limit && levels(s, t)) {
      if (deadline) deadline->check();
      next_.assign(adj_.size(), 0);
      while (total < limit) {
        const long long pushed = augment(s, t, limit - total);
        if (pushed == 0) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Splits the current s-t flow into unit paths (node sequences from s to t).
  /// Consumes the flow; assumes the network is acyclic.
  std::vector<std::vector<int>> decompose(int s, int t) {
    std::vector<std::vector<int>> out;
    for (;;) {
      std::vector<int> path{s};
      int u = s;
      while (u != t) {
        int next = -1;
        for (auto& a : adj_[std::size_t(u)])
          if (a.cap > 0 && a.flow > 0) {
            --a.flow;
            next = a.to;
            break;
          }
        if (next < 0) {
          if (u != s) throw std::logic_error("flow is not conserved");
          return out;
        }
        path.push_back(next);
        u = next;
      }
      out.push_back(std::move(path));
    }
  }

 private:
  bool levels(int s, int t) {
    level_.assign(adj_.size(), -1);
    std::vector<int> queue{s};
    level_[std::size_t(s)] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int u = queue[h];
      for (const auto& a : adj_[std::size_t(u)])
        if (a.cap - a.flow > 0 && level_[std::size_t(a.to)] < 0) {
          level_[std::size_t(a.to)] = level_[std::size_t(u)] + 1;
          queue.push_back(a.to);
        }
    }
    return level_[std::size_t(t)] >= 0;
  }

  // Iterative blocking-flow step: one augmenting path along the level graph.
  long long augment(int s, int t, long long limit) {
    std::vector<std::pair<int, int>> stack;  // (node, arc index)
    int u = s;
    while (true) {
      if (u == t) {
        long long f = limit;
        for (auto [v, k] : stack) {
          const auto& a = adj_[std::size_t(v)][std::size_t(k)];
          f = std::min<long long>(f, a.cap - a.flow);
        }
        for (auto [v, k] : stack) {
          auto& a = adj_[std::size_t(v)][std::size_t(k)];
          a.flow += int(f);
          adj_[std::size_t(a.to)][std::size_t(a.rev)].flow -= int(f);
        }
        return f;
      }
      auto& i = next_[std::size_t(u)];
      const auto& out = adj_[std::size_t(u)];
      while (i < int(out.size())) {
        const auto& a = out[std::size_t(i)];
        if (a.cap - a.flow > 0 && level_[std::size_t(a.to)] == level_[std::size_t(u)] + 1) break;
        ++i;
      }
      if (i < int(out.size())) {
        stack.push_back({u, i});
        u = out[std::size_t(i)].to;
        continue;
      }
      level_[std::size_t(u)] = -1;
      if (stack.empty()) return 0;
      u = stack.back().first;
      stack.pop_back();
      ++next_[std::size_t(u)];
    }
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_;
  std::vector<int> next_;
};

/// Interchangeable robots: every source must reach some target, one robot per target.
struct UnlabeledProblem {
  MapPtr map;
  Configuration sources;
  Configuration targets;
};

/// Throws InvalidInstance unless both sets are free, distinct, equally sized and
/// every component holds as many sources as targets.
inline void check_unlabeled(const UnlabeledProblem& p) {
  if (!p.map) throw InvalidInstance("problem has no map");
  if (p.sources.size() != p.targets.size()) throw InvalidInstance("source and target sets differ in size");
  const auto& map = *p.map;
  std::vector<std::uint8_t> seen_s(std::size_t(map.cell_count()), 0), seen_t(seen_s);
  std::vector<long> balance(std::size_t(std::max(map.component_count(), 1)), 0);
  for (VertexId v : p.sources) {
    if (!map.is_free(v)) throw InvalidInstance("source vertex is not free");
    if (seen_s[std::size_t(v)]++) throw InvalidInstance("source set repeats a vertex");
    ++balance[std::size_t(map.component(v))];
  }
  for (VertexId v : p.targets) {
    if (!map.is_free(v)) throw InvalidInstance("target vertex is not free");
    if (seen_t[std::size_t(v)]++) throw InvalidInstance("target set repeats a vertex");
    --balance[std::size_t(map.component(v))];
  }
  for (long b : balance)
    if (b != 0) throw InvalidInstance("sources and targets are not matched within components");
}

/// Multi-source BFS distance from a vertex set; unreachable cells get INT_MAX.
inline std::vector<int> distance_from_set(const GridMap& map, std::span<const VertexId> set) {
  std::vector<int> d(std::size_t(map.cell_count()), std::numeric_limits<int>::max());
  std::vector<VertexId> queue;
  for (VertexId v : set)
    if (d[std::size_t(v)] != 0) {
      d[std::size_t(v)] = 0;
      queue.push_back(v);
    }
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const VertexId u = queue[h];
    for (VertexId w : map.adjacent(u))
      if (w != kNoVertex && d[std::size_t(w)] == std::numeric_limits<int>::max()) {
        d[std::size_t(w)] = d[std::size_t(u)] + 1;
        queue.push_back(w);
      }
  }
  return d;
}

/// Makespan lower bound: the farthest target from its nearest source, and vice versa.
inline std::size_t unlabeled_lower_bound(const UnlabeledProblem& p) {
  const auto ds = distance_from_set(*p.map, p.sources);
  const auto dt = distance_from_set(*p.map, p.targets);
  int lb = 0;
  for (VertexId v : p.targets) lb = std::max(lb, ds[std::size_t(v)]);
  for (VertexId v : p.sources) lb = std::max(lb, dt[std::size_t(v)]);
  return std::size_t(lb);
}

/// Time-expanded network for horizon T. Every (vertex, t) is split into an
/// in/out pair of unit capacity; every map edge gets one unit-capacity gadget
/// per step, shared by both directions, so head-on swaps are impossible while
/// rotations along distinct edges stay legal. Cells that cannot lie on any
/// source-to-target route within T are left out.
class TimeExpandedNetwork {
 public:
  TimeExpandedNetwork(const UnlabeledProblem& p, std::size_t horizon)
      : map_(*p.map), horizon_(horizon), sources_(p.sources), targets_(p.targets) {
    const auto ds = distance_from_set(map_, p.sources);
    const auto dt = distance_from_set(map_, p.targets);
    const int T = int(horizon);
    const auto cells = std::size_t(map_.cell_count());
    in_.assign((horizon + 1) * cells, -1);
    out_.assign((horizon + 1) * cells, -1);
    source_ = net_.add_node();
    sink_ = net_.add_node();
    auto usable = [&](VertexId v, int t) {
      const int a = ds[std::size_t(v)], b = dt[std::size_t(v)];
      return a != std::numeric_limits<int>::max() && b != std::numeric_limits<int>::max() && a <= t &&
             b <= T - t;
    };
    for (int t = 0; t <= T; ++t)
      for (VertexId v : map_.free_vertices()) {
        if (!usable(v, t)) continue;
        const std::size_t k = slot(v, t);
        in_[k] = net_.add_node();
        out_[k] = net_.add_node();
        net_.add_arc(in_[k], out_[k], 1);
      }
    for (int t = 0; t < T; ++t) {
      for (VertexId v : map_.free_vertices()) {
        const int from = out_[slot(v, t)];
        const int to = in_[slot(v, t + 1)];
        if (from >= 0 && to >= 0) net_.add_arc(from, to, 1);
      }
      for (VertexId u : map_.free_vertices())
        for (VertexId v : map_.adjacent(u)) {
          if (v == kNoVertex || v < u) continue;
          const int ou = out_[slot(u, t)], ov = out_[slot(v, t)];
          const int iu = in_[slot(u, t + 1)], iv = in_[slot(v, t + 1)];
          const bool uv = ou >= 0 && iv >= 0, vu = ov >= 0 && iu >= 0;
          if (!uv && !vu) continue;
          const int g_in = net_.add_node(), g_out = net_.add_node();
          net_.add_arc(g_in, g_out, 1);
          if (uv) {
            net_.add_arc(ou, g_in, 1);
            net_.add_arc(g_out, iv, 1);
          }
          if (vu) {
            net_.add_arc(ov, g_in, 1);
            net_.add_arc(g_out, iu, 1);
          }
        }
    }
    for (VertexId s : sources_)
      if (in_[slot(s, 0)] >= 0) net_.add_arc(source_, in_[slot(s, 0)], 1);
    for (VertexId g : targets_)
      if (out_[slot(g, T)] >= 0) net_.add_arc(out_[slot(g, T)], sink_, 1);
  }

  std::size_t horizon() const { return horizon_; }
  FlowNetwork& network() { return net_; }

  std::size_t max_flow(const Deadline* deadline = nullptr) {
    return std::size_t(net_.max_flow(source_, sink_, (long long)sources_.size(), deadline));
  }

  /// Vertex sequences p^0..p^T, one per unit of flow, ordered like the sources.
  Plan paths() {
    std::vector<std::pair<int, VertexId>> owner(std::size_t(net_.node_count()), {-1, kNoVertex});
    const auto cells = std::size_t(map_.cell_count());
    for (std::size_t k = 0; k < out_.size(); ++k)
      if (out_[k] >= 0) owner[std::size_t(out_[k])] = {int(k / cells), VertexId(k % cells)};
    Plan plan(sources_.size());
    std::vector<int> index(cells, -1);
    for (std::size_t r = 0; r < sources_.size(); ++r) index[std::size_t(sources_[r])] = int(r);
    for (const auto& units : net_.decompose(source_, sink_)) {
      Path p;
      for (int node : units)
        if (owner[std::size_t(node)].first >= 0) p.push_back(owner[std::size_t(node)].second);
      if (p.size() != horizon_ + 1) throw std::logic_error("flow path skips a timestep");
      plan[std::size_t(index[std::size_t(p.front())])] = std::move(p);
    }
    return plan;
  }

 private:
  std::size_t slot(VertexId v, int t) const { return std::size_t(t) * std::size_t(map_.cell_count()) + std::size_t(v); }

  const GridMap& map_;
  std::size_t horizon_;
  Configuration sources_;
  Configuration targets_;
  FlowNetwork net_;
  int source_ = 0;
  int sink_ = 0;
  std::vector<int> in_;
  std::vector<int> out_;
};

/// Largest number of sources routable to distinct targets within `horizon` steps.
inline std::size_t max_flow_value(const UnlabeledProblem& p, std::size_t horizon, const Deadline* deadline = nullptr) {
  TimeExpandedNetwork net(p, horizon);
  return net.max_flow(deadline);
}

struct UnlabeledSolution {
  std::size_t horizon = 0;
  std::vector<int> assignment;  // source index -> target index
  Configuration reached;        // target vertex reached from each source
  Plan plan;                    // one path per source, trimmed
};

/// Minimal-makespan collision-free unlabeled plan. The horizon grows by one
/// from unlabeled_lower_bound until the flow saturates.
inline UnlabeledSolution solve_unlabeled(const UnlabeledProblem& p, const Deadline* deadline = nullptr) {
  check_unlabeled(p);
  const std::size_t n = p.sources.size();
  UnlabeledSolution sol;
  if (n == 0) return sol;
  const std::size_t cap = std::size_t(p.map->free_count()) + n;
  for (std::size_t T = unlabeled_lower_bound(p); T <= cap; ++T) {
    if (deadline) deadline->check();
    TimeExpandedNetwork net(p, T);
    if (net.max_flow(deadline) < n) continue;
    sol.horizon = T;
    sol.plan = net.paths();
    std::vector<int> target_index(std::size_t(p.map->cell_count()), -1);
    for (std::size_t k = 0; k < n; ++k) target_index[std::size_t(p.targets[k])] = int(k);
    for (const auto& path : sol.plan) {
      sol.assignment.push_back(target_index[std::size_t(path.back())]);
      sol.reached.push_back(path.back());
    }
    trim(sol.plan);
    return sol;
  }
  throw std::logic_error("unlabeled horizon search exceeded its bound");
}

}  // namespace densemapf
