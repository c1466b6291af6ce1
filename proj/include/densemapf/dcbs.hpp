#pragma once

// ECBS with database conflict resolution. When a trigger policy fires on the
// node about to be expanded, its plan is repaired by splicing optimal local
// motions from the primitive database; the repaired plan is returned if it
// passes the optimality gate, otherwise the search carries on.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deadline.hpp"
#include "ecbs.hpp"
#include "plan.hpp"
#include "primitive_db.hpp"

namespace densemapf {

struct TriggerPolicy {
  enum class Kind { NocThreshold, PocRatio, Stagnation };
  Kind kind = Kind::NocThreshold;
  std::size_t noc_p = 20;
  double fraction = 0.10;
  std::size_t window = 100;
  std::size_t delta = 0;

  static TriggerPolicy noc(std::size_t n) { return {Kind::NocThreshold, n, 0.10, 100, 0}; }
  static TriggerPolicy poc(double f) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("poc fraction must be in (0, 1]");
    return {Kind::PocRatio, 20, f, 100, 0};
  }
  static TriggerPolicy stagnation(std::size_t k, std::size_t d = 0) {
    if (k < 1) throw std::invalid_argument("stagnation window must be at least 1");
    return {Kind::Stagnation, 20, 0.10, k, d};
  }

  /// Parses "noc:20", "poc:0.10" or "stag:100:0".
  static TriggerPolicy parse(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t from = 0;
    for (std::size_t at; (at = text.find(':', from)) != std::string::npos; from = at + 1)
      parts.push_back(text.substr(from, at - from));
    parts.push_back(text.substr(from));
    try {
      if (parts[0] == "noc" && parts.size() == 2) return noc(std::stoul(parts[1]));
      if (parts[0] == "poc" && parts.size() == 2) return poc(std::stod(parts[1]));
      if (parts[0] == "stag" && (parts.size() == 2 || parts.size() == 3))
        return stagnation(std::stoul(parts[1]), parts.size() == 3 ? std::stoul(parts[2]) : 0);
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument("bad trigger '" + text + "' (expected noc:N, poc:F or stag:K[:D])");
  }
};

inline std::string to_string(const TriggerPolicy& p) {
  switch (p.kind) {
    case TriggerPolicy::Kind::NocThreshold: return "noc:" + std::to_string(p.noc_p);
    case TriggerPolicy::Kind::PocRatio: {
      std::string f = std::to_string(p.fraction);
      while (f.size() > 1 && f.back() == '0') f.pop_back();
      return "poc:" + f;
    }
    case TriggerPolicy::Kind::Stagnation: return "stag:" + std::to_string(p.window) + ":" + std::to_string(p.delta);
  }
  return "?";
}

enum class GateObjective { Makespan, Soc };

inline GateObjective parse_gate(const std::string& s) {
  if (s == "mkpn" || s == "makespan") return GateObjective::Makespan;
  if (s == "soc") return GateObjective::Soc;
  throw std::invalid_argument("bad gate '" + s + "' (expected mkpn or soc)");
}

inline const char* to_string(GateObjective g) { return g == GateObjective::Makespan ? "mkpn" : "soc"; }

/// Whether to hand the node to the database. `history` holds expanded NOCs
/// (oldest first, this node last); `root_noc` is the root's NOC.
inline bool db_triggered(const TriggerPolicy& p, std::size_t noc, std::span<const std::size_t> history,
                         std::size_t root_noc) {
  if (noc == 0) return true;
  switch (p.kind) {
    case TriggerPolicy::Kind::NocThreshold: return noc <= p.noc_p;
    case TriggerPolicy::Kind::PocRatio:
      return root_noc > 0 && double(noc) <= p.fraction * double(root_noc) + 1e-12;
    case TriggerPolicy::Kind::Stagnation: {
      if (history.size() < p.window) return false;
      // running minimum at the window's first entry versus now
      std::size_t before = std::numeric_limits<std::size_t>::max();
      const std::size_t first = history.size() - p.window;
      for (std::size_t i = 0; i <= first; ++i) before = std::min(before, history[i]);
      std::size_t now = before;
      for (std::size_t i = first + 1; i < history.size(); ++i) now = std::min(now, history[i]);
      return before - now <= p.delta;
    }
  }
  return false;
}

/// Gate on the conservative lower bound. An infinite w2 always passes.
inline bool check_optimality(const Plan& plan, const LowerBounds& lb, double w2, GateObjective objective) {
  if (std::isinf(w2)) return true;
  const Metrics m = metrics(plan);
  if (objective == GateObjective::Makespan) return double(m.makespan) <= w2 * double(lb.makespan) + 1e-9;
  return double(m.soc) <= w2 * double(lb.soc) + 1e-9;
}

struct ResolutionStats {
  std::size_t splices = 0;
  std::size_t iterations = 0;
};

namespace dcbs_detail {

inline constexpr int kMaxAdvance = 3;
inline constexpr std::size_t kMaxAssignments = 512;
inline constexpr std::size_t kMaxTrials = 16;
inline constexpr std::size_t kMaxPlacements = 6;
inline constexpr int kMaxPostpone = 4;

/// A cell on the robot's own path; it stands there for steps [first, last]
/// of the original schedule counted from t0.
struct Option {
  int cell;
  int first;
  int last;

  /// Steps along the original path when reached after a motion of length m.
  int advance(int m) const { return std::clamp(m, first, last); }
};

struct Assignment {
  std::vector<int> choice;  // option index per in-subgrid robot
  int makespan = 0;
  long delay = 0;
};

/// Conflicts at steps up to and including `t`.
inline std::size_t conflicts_through(const Plan& plan, std::size_t t) {
  std::size_t n = 0;
  detail::for_each_conflict(plan, [&](const Conflict& c) {
    if (std::size_t(c.time) > t) return false;
    ++n;
    return true;
  });
  return n;
}

/// Builds the plan in which `inside` robots follow `states` from t0 and then
/// resume their own paths `advance` steps further on; every other robot that
/// would step onto a locked cell waits in place until the motion ends.
inline Plan splice(const GridMap& map, const SubgridSpec& spec, const Plan& plan, std::size_t t0,
                   const std::vector<int>& inside, const std::vector<JointState>& states,
                   const std::vector<int>& advance) {
  const std::size_t m = states.size() - 1, end = t0 + m;
  Plan out = plan;
  std::vector<char> is_inside(plan.size(), 0);
  for (std::size_t k = 0; k < inside.size(); ++k) {
    const auto r = static_cast<std::size_t>(inside[k]);
    is_inside[r] = 1;
    const Path& o = plan[r];
    Path p;
    for (std::size_t s = 0; s < t0; ++s) p.push_back(at(o, s));
    for (const auto& st : states) p.push_back(spec.vertex_of(map, st[k]));
    for (std::size_t s = t0 + std::size_t(advance[k]) + 1; s < o.size(); ++s) p.push_back(o[s]);
    out[r] = std::move(p);
  }
  if (m == 0) return out;

  // freeze[r]: first step at which r stops, end + 1 when it moves freely
  std::vector<std::size_t> freeze(plan.size(), end + 1);
  for (bool changed = true; changed;) {
    changed = false;
    std::unordered_map<VertexId, std::size_t> held;
    for (std::size_t r = 0; r < plan.size(); ++r)
      if (!is_inside[r] && freeze[r] <= end) {
        const VertexId v = at(plan[r], freeze[r] - 1);
        auto [it, fresh] = held.emplace(v, freeze[r]);
        if (!fresh) it->second = std::min(it->second, freeze[r]);
      }
    for (std::size_t r = 0; r < plan.size(); ++r) {
      if (is_inside[r]) continue;
      for (std::size_t s = t0 + 1; s < freeze[r]; ++s) {
        const VertexId v = at(plan[r], s);
        const auto h = held.find(v);
        const bool own = h != held.end() && freeze[r] <= end && at(plan[r], freeze[r] - 1) == v;
        if (spec.contains(map, v) || (h != held.end() && h->second <= s && !own)) {
          freeze[r] = s;
          changed = true;
          break;
        }
      }
    }
  }
  for (std::size_t r = 0; r < plan.size(); ++r) {
    if (is_inside[r] || freeze[r] > end) continue;
    const Path& o = plan[r];
    const std::size_t f = freeze[r];
    Path p;
    for (std::size_t s = 0; s < f; ++s) p.push_back(at(o, s));
    for (std::size_t s = f; s <= end; ++s) p.push_back(at(o, f - 1));
    for (std::size_t s = f; s < o.size(); ++s) p.push_back(o[s]);
    out[r] = std::move(p);
  }
  return out;
}

/// One repair of `c` inside one placement. A candidate must lower the number
/// of conflicts up to the conflict's step; among those the preferred one
/// separates the pair for good, then leaves the fewest conflicts, then delays
/// robots least.
/// Whether two paths ever collide.
inline bool collide(const Path& p, const Path& q) {
  const std::size_t T = std::max(p.size(), q.size());
  for (std::size_t t = 0; t < T; ++t) {
    if (at(p, t) == at(q, t)) return true;
    if (t > 0 && at(p, t) == at(q, t - 1) && at(q, t) == at(p, t - 1) && at(p, t) != at(p, t - 1)) return true;
  }
  return false;
}

struct Repair {
  Plan plan;
  bool postponed = false;  // the pair still collides later on
  std::size_t remaining = 0;
  long delay = 0;

  auto key() const { return std::tie(postponed, remaining, delay); }
};

inline std::optional<Repair> resolve_in(const GridMap& map, const DbBundle& db, const SubgridSpec& spec,
                                      const Plan& plan, const Conflict& c) {
  const std::size_t t = std::size_t(c.time), t0 = t - 1;
  const PrimitiveDb& table = db.for_shape(spec.db_shape());
  std::vector<int> inside;
  std::vector<std::vector<Option>> options;
  JointState start;
  for (std::size_t r = 0; r < plan.size(); ++r) {
    const VertexId v = at(plan[r], t0);
    if (!spec.contains(map, v)) continue;
    inside.push_back(int(r));
    start.push_back(spec.local_of(map, v));
    std::vector<Option> opts;
    for (int k = 0; k <= kMaxAdvance; ++k) {
      const VertexId w = at(plan[r], t0 + std::size_t(k));
      if (!spec.contains(map, w)) break;
      const int cell = spec.local_of(map, w);
      auto same = std::find_if(opts.begin(), opts.end(), [&](const Option& o) { return o.cell == cell; });
      if (same != opts.end() && same->last == k - 1)
        same->last = k;
      else if (same == opts.end())
        opts.push_back({cell, k, k});
      else
        break;
    }
    std::reverse(opts.begin(), opts.end());
    options.push_back(std::move(opts));
  }

  std::vector<Assignment> found;
  std::vector<int> choice(inside.size());
  JointState goal(inside.size());
  unsigned used = 0;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (found.size() >= kMaxAssignments) return;
    if (i == inside.size()) {
      const auto mk = table.makespan(start, goal);
      if (!mk) return;
      // a motion of length zero still holds everyone for one step
      const int len = std::max(*mk, 1);
      Assignment a{choice, len, 0};
      bool unchanged = true;
      for (std::size_t k = 0; k < inside.size(); ++k) {
        const int adv = options[k][std::size_t(choice[k])].advance(len);
        a.delay += std::abs(long(len) - adv);
        unchanged = unchanged && goal[k] == start[k] && adv == len;
      }
      if (unchanged) return;
      found.push_back(std::move(a));
      return;
    }
    for (std::size_t o = 0; o < options[i].size(); ++o) {
      const int cell = options[i][o].cell;
      if (used & (1u << cell)) continue;
      used |= 1u << cell;
      choice[i] = int(o);
      goal[i] = cell;
      self(self, i + 1);
      used &= ~(1u << cell);
    }
  };
  rec(rec, 0);
  std::stable_sort(found.begin(), found.end(), [](const Assignment& a, const Assignment& b) {
    return std::tie(a.delay, a.makespan) < std::tie(b.delay, b.makespan);
  });

  const std::size_t before = conflicts_through(plan, t);
  std::optional<Repair> best;
  for (std::size_t n = 0; n < found.size() && n < kMaxTrials; ++n) {
    const auto& a = found[n];
    JointState g(inside.size());
    std::vector<int> advance(inside.size());
    for (std::size_t k = 0; k < inside.size(); ++k) {
      g[k] = options[k][std::size_t(a.choice[k])].cell;
      advance[k] = options[k][std::size_t(a.choice[k])].advance(a.makespan);
    }
    auto motion = table.query(start, g);
    if (!motion) continue;
    while (int(motion->states.size()) <= a.makespan) motion->states.push_back(motion->states.back());
    Plan next = splice(map, spec, plan, t0, inside, motion->states, advance);
    if (conflicts_through(next, t) >= before) continue;
    Repair r{{}, collide(next[std::size_t(c.a)], next[std::size_t(c.b)]), count_conflicts(next), a.delay};
    if (!best || r.key() < best->key()) {
      r.plan = std::move(next);
      best = std::move(r);
    }
    if (best->remaining == 0) break;
  }
  return best;
}

}  // namespace dcbs_detail

/// Repeatedly repairs the first conflict of `plan` with database motions.
/// Fails when a conflict has no usable placement, when one pair can only be
/// pushed later more than a few times, when the conflicts grow past
/// 4 x initial + 20, or when the iteration cap of 10 x (initial + 1) is hit.
inline std::optional<Plan> db_resolution(const GridMap& map, const DbBundle& db, Plan plan,
                                         const Deadline* deadline = nullptr, ResolutionStats* stats = nullptr) {
  const std::size_t initial = count_conflicts(plan), cap = 10 * (initial + 1);
  std::map<std::pair<int, int>, int> postponed;
  for (std::size_t it = 0; it < cap; ++it) {
    if (deadline) deadline->check();
    const auto c = first_conflict(plan);
    if (!c) {
      trim(plan);
      return plan;
    }
    if (stats) ++stats->iterations;
    const std::size_t t = std::size_t(c->time);
    const Path &pa = plan[std::size_t(c->a)], &pb = plan[std::size_t(c->b)];
    auto specs = enclosing_subgrids(map, std::vector<VertexId>{at(pa, t - 1), at(pa, t), at(pb, t - 1), at(pb, t)});
    // placements covering more of where the pair is headed come first
    auto ahead = [&](const SubgridSpec& sp) {
      int n = 0;
      for (std::size_t s = t + 1; s <= t + 2; ++s) n += sp.contains(map, at(pa, s)) + sp.contains(map, at(pb, s));
      return n;
    };
    std::stable_sort(specs.begin(), specs.end(),
                     [&](const SubgridSpec& x, const SubgridSpec& y) { return ahead(x) > ahead(y); });
    std::optional<dcbs_detail::Repair> next;
    std::size_t tried = 0;
    for (const auto& spec : specs) {
      if (tried++ == dcbs_detail::kMaxPlacements) break;
      auto r = dcbs_detail::resolve_in(map, db, spec, plan, *c);
      if (r && (!next || r->key() < next->key()))
        next = std::move(r);
      if (next && next->remaining == 0) break;
    }
    if (!next || next->remaining > 4 * initial + 20) return std::nullopt;
    if (next->postponed && ++postponed[{c->a, c->b}] > dcbs_detail::kMaxPostpone) return std::nullopt;
    if (stats) ++stats->splices;
    plan = std::move(next->plan);
  }
  return first_conflict(plan) ? std::nullopt : std::optional<Plan>(std::move(plan));
}

using DbResolver = std::function<std::optional<Plan>(const Plan&)>;

struct DcbsConfig {
  double w1 = 1.5;
  double w2 = std::numeric_limits<double>::infinity();
  TriggerPolicy trigger = TriggerPolicy::noc(20);
  TieBreak tiebreak = TieBreak::byLifo;
  GateObjective gate = GateObjective::Makespan;
  double time_limit = 60.0;
  std::size_t max_expansions = 0;
  bool record_trace = false;
  /// Replaces the database repair; used to probe the fallback path.
  DbResolver resolver;
};

struct DcbsResult : EcbsResult {
  std::size_t db_attempts = 0;
  std::size_t db_failures = 0;
  std::size_t gate_failures = 0;
  std::size_t splices = 0;
};

inline DcbsResult solve_dcbs(const DistanceOracle& oracle, const Instance& inst, const DbBundle& db,
                             const DcbsConfig& cfg) {
  if (!std::isinf(cfg.w2) && cfg.w2 < 1.0) throw std::invalid_argument("w2 must be at least 1");
  const LowerBounds lb = lower_bounds(oracle, inst);
  const Deadline deadline(cfg.time_limit);
  DcbsResult out;
  std::size_t window_start = 0;
  ResolutionStats rs;

  EcbsOptions opts;
  opts.w1 = cfg.w1;
  opts.tiebreak = cfg.tiebreak;
  opts.time_limit = cfg.time_limit;
  opts.max_expansions = cfg.max_expansions;
  opts.record_trace = cfg.record_trace;
  opts.hook = [&](const NodeView& v) {
    if (v.node.noc == 0) {
      Plan plan = v.state.plan();
      if (check_optimality(plan, lb, cfg.w2, cfg.gate)) return NodeVerdict::accept(std::move(plan));
      ++out.gate_failures;
      return NodeVerdict::discard();
    }
    const std::span<const std::size_t> history(v.noc_history.data() + window_start,
                                               v.noc_history.size() - window_start);
    if (!db_triggered(cfg.trigger, v.node.noc, history, v.root_noc)) return NodeVerdict::expand();
    ++out.db_attempts;
    const auto repaired = cfg.resolver ? cfg.resolver(v.state.plan())
                                       : db_resolution(oracle.map(), db, v.state.plan(), &deadline, &rs);
    if (repaired && check_optimality(*repaired, lb, cfg.w2, cfg.gate)) return NodeVerdict::accept(*repaired);
    if (repaired)
      ++out.gate_failures;
    else
      ++out.db_failures;
    window_start = v.noc_history.size();
    return NodeVerdict::expand();
  };
  static_cast<EcbsResult&>(out) = EcbsSolver(oracle, inst, std::move(opts)).solve();
  out.splices = rs.splices;
  return out;
}

/// Database resolution applied once to the root plan, without search.
inline DcbsResult solve_db_at_root(const DistanceOracle& oracle, const Instance& inst, const DbBundle& db,
                                   double time_limit = 60.0) {
  DcbsConfig cfg;
  cfg.trigger = TriggerPolicy::noc(std::numeric_limits<std::size_t>::max());
  cfg.time_limit = time_limit;
  cfg.max_expansions = 1;
  return solve_dcbs(oracle, inst, db, cfg);
}

}  // namespace densemapf
