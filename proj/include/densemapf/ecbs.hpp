#pragma once

// Constraint-tree search. ECBS(w1) runs focal search at both levels; CBS is the
// w1 = 1 case. CT nodes store only the replanned robot's path and constraint
// and are materialized by walking to the root.

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "deadline.hpp"
#include "grid.hpp"
#include "instance.hpp"
#include "low_level.hpp"
#include "plan.hpp"

namespace densemapf {

enum class TieBreak { bySoc, byLifo };

/// FOCAL membership: against the smallest lb in OPEN, or against each node's own lb.
enum class FocalRule { GlobalLb, PerNode };

enum class SolveStatus { Solved, Timeout, Infeasible, Exhausted };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Timeout: return "timeout";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Exhausted: return "exhausted";
  }
  return "?";
}

inline const char* to_string(TieBreak t) { return t == TieBreak::bySoc ? "soc" : "lifo"; }

struct TraceRow {
  std::size_t iteration = 0;
  std::size_t expanded_noc = 0;
  std::size_t open_size = 0;
};

struct CTNode {
  std::shared_ptr<const CTNode> parent;
  int robot = -1;  // replanned robot, -1 at the root
  std::optional<Constraint> constraint;
  std::shared_ptr<const Path> path;
  int f_min = 0;
  // root only: every robot's path and f_min
  std::vector<std::shared_ptr<const Path>> root_paths;
  std::vector<int> root_f_min;

  std::size_t soc = 0;
  std::size_t lb = 0;
  std::size_t noc = 0;
  std::uint64_t seq = 0;
  std::size_t depth = 0;
};

using CTNodePtr = std::shared_ptr<const CTNode>;

/// Paths and per-robot f_min of a node.
struct NodeState {
  std::vector<std::shared_ptr<const Path>> paths;
  std::vector<int> f_min;

  Plan plan() const {
    Plan p;
    p.reserve(paths.size());
    for (const auto& q : paths) p.push_back(*q);
    return p;
  }
};

inline NodeState materialize(const CTNode& node) {
  const CTNode* root = &node;
  while (root->parent) root = root->parent.get();
  NodeState s;
  s.paths.assign(root->root_paths.size(), nullptr);
  s.f_min.assign(root->root_paths.size(), 0);
  std::vector<char> seen(root->root_paths.size(), 0);
  for (const CTNode* n = &node; n->parent; n = n->parent.get()) {
    const auto r = static_cast<std::size_t>(n->robot);
    if (seen[r]) continue;
    seen[r] = 1;
    s.paths[r] = n->path;
    s.f_min[r] = n->f_min;
  }
  for (std::size_t r = 0; r < seen.size(); ++r)
    if (!seen[r]) {
      s.paths[r] = root->root_paths[r];
      s.f_min[r] = root->root_f_min[r];
    }
  return s;
}

/// Constraints imposed on `robot` along the path from the root to `node`.
inline ConstraintSet constraints_for(const CTNode& node, int robot) {
  ConstraintSet cs;
  for (const CTNode* n = &node; n->parent; n = n->parent.get())
    if (n->robot == robot && n->constraint) cs.add(*n->constraint);
  return cs;
}

/// What the node hook decides for a popped node.
struct NodeVerdict {
  enum class Action { Expand, Accept, Discard };
  Action action = Action::Expand;
  Plan plan;  // for Accept

  static NodeVerdict expand() { return {}; }
  static NodeVerdict discard() { return {Action::Discard, {}}; }
  static NodeVerdict accept(Plan p) { return {Action::Accept, std::move(p)}; }
};

/// Information passed to the hook before a node is expanded.
struct NodeView {
  const CTNode& node;
  const NodeState& state;
  const std::vector<std::size_t>& noc_history;  // expanded NOC per iteration, this node included
  std::size_t root_noc;
  std::size_t lb_min;
};

using NodeHook = std::function<NodeVerdict(const NodeView&)>;

struct EcbsOptions {
  double w1 = 1.5;
  TieBreak tiebreak = TieBreak::bySoc;
  FocalRule focal_rule = FocalRule::GlobalLb;
  double time_limit = 60.0;
  std::size_t max_expansions = 0;  // 0: unlimited
  bool record_trace = false;
  NodeHook hook;
};

struct EcbsResult {
  SolveStatus status = SolveStatus::Exhausted;
  Plan plan;
  std::size_t lb_min = 0;
  std::size_t root_lb = 0;
  std::size_t root_noc = 0;
  std::size_t expansions = 0;
  std::size_t generated = 0;
  bool accepted_by_hook = false;
  std::vector<TraceRow> trace;
  double seconds = 0;

  bool solved() const { return status == SolveStatus::Solved; }
};

class EcbsSolver {
 public:
  EcbsSolver(const DistanceOracle& oracle, const Instance& inst, EcbsOptions opts)
      : oracle_(oracle), inst_(inst), opts_(std::move(opts)) {
    if (opts_.w1 < 1.0) throw std::invalid_argument("w1 must be >= 1");
    check_instance(inst_, false);
    mkpn_lb_ = lower_bounds(oracle_, inst_).makespan;
  }

  EcbsResult solve() {
    Stopwatch clock;
    deadline_ = Deadline(opts_.time_limit);
    EcbsResult res;
    try {
      run(res);
    } catch (const Timeout&) {
      res.status = SolveStatus::Timeout;
      res.plan.clear();
    }
    if (res.status != SolveStatus::Solved && !open_by_lb_.empty()) res.lb_min = open_by_lb_.begin()->first;
    res.seconds = clock.seconds();
    return res;
  }

  /// Constraint added to robot a (first) and robot b (second) for a conflict.
  static std::array<Constraint, 2> branch_constraints(const Conflict& c) {
    if (c.kind == ConflictKind::Vertex)
      return {Constraint::vertex(c.a, c.v, c.time), Constraint::vertex(c.b, c.v, c.time)};
    return {Constraint::edge(c.a, c.u, c.v, c.time), Constraint::edge(c.b, c.v, c.u, c.time)};
  }

  /// Root node: robots planned in index order against those already planned.
  /// Null when some robot cannot reach its goal.
  CTNodePtr make_root() {
    const auto& map = oracle_.map();
    for (std::size_t r = 0; r < inst_.size(); ++r)
      if (map.component(inst_.starts[r]) != map.component(inst_.goals[r])) return nullptr;
    auto root = std::make_shared<CTNode>();
    ConflictTable cat(map);
    const ConstraintSet none;
    for (std::size_t r = 0; r < inst_.size(); ++r) {
      SearchContext ctx{&oracle_, inst_.starts[r], inst_.goals[r], &none, &cat, horizon_cap(none), &deadline_};
      auto found = focal_astar(ctx, opts_.w1);
      if (!found) return nullptr;
      cat.add(found->path);
      root->root_paths.push_back(std::make_shared<const Path>(std::move(found->path)));
      root->root_f_min.push_back(found->f_min);
    }
    Plan root_plan;
    for (const auto& p : root->root_paths) {
      root->soc += p->size() - 1;
      root_plan.push_back(*p);
    }
    for (int f : root->root_f_min) root->lb += static_cast<std::size_t>(f);
    root->noc = count_conflicts(root_plan);
    root->seq = next_seq_++;
    return root;
  }

  /// Children of `node` for `conflict`; a child whose replan fails is dropped.
  std::vector<CTNodePtr> expand(const CTNodePtr& node, const NodeState& state, const Conflict& conflict) {
    ConflictTable table(oracle_.map());
    for (const auto& p : state.paths) table.add(*p);
    std::vector<CTNodePtr> out;
    for (const auto& c : branch_constraints(conflict))
      if (auto child = expand_child(node, state, table, c)) out.push_back(std::move(child));
    return out;
  }

  std::vector<CTNodePtr> expand(const CTNodePtr& node, const Conflict& conflict) {
    return expand(node, materialize(*node), conflict);
  }

 private:
  using FocalKey = std::tuple<std::size_t, std::int64_t, std::uint64_t>;

  FocalKey focal_key(const CTNode& n) const {
    if (opts_.tiebreak == TieBreak::byLifo) return {n.noc, -static_cast<std::int64_t>(n.seq), n.seq};
    return {n.noc, static_cast<std::int64_t>(n.soc), n.seq};
  }

  bool within(std::size_t soc, std::size_t lb) const {
    return static_cast<double>(soc) <= opts_.w1 * static_cast<double>(lb) + 1e-9;
  }

  int horizon_cap(const ConstraintSet& cs) const {
    return static_cast<int>(oracle_.map().free_count()) + static_cast<int>(mkpn_lb_) + cs.max_time();
  }

  void push(CTNodePtr node) {
    const auto id = static_cast<std::size_t>(node->seq);
    if (nodes_.size() <= id) nodes_.resize(id + 1);
    nodes_[id] = node;
    open_by_lb_.insert({node->lb, id});
    open_by_soc_.insert({node->soc, id});
    const bool in_focal = opts_.focal_rule == FocalRule::PerNode ? within(node->soc, node->lb)
                                                                 : within(node->soc, lb_min_);
    if (in_focal) focal_.insert({focal_key(*node), id});
  }

  void erase(std::size_t id) {
    const auto& n = *nodes_[id];
    open_by_lb_.erase({n.lb, id});
    open_by_soc_.erase({n.soc, id});
    focal_.erase({focal_key(n), id});
  }

  // Global rule: LB_min may have risen; admit nodes whose soc now fits.
  void refresh_focal() {
    if (opts_.focal_rule != FocalRule::GlobalLb || open_by_lb_.empty()) return;
    const std::size_t new_lb = open_by_lb_.begin()->first;
    if (new_lb <= lb_min_) return;
    const double old_bound = opts_.w1 * double(lb_min_), new_bound = opts_.w1 * double(new_lb);
    for (auto it = open_by_soc_.lower_bound({static_cast<std::size_t>(old_bound), 0}); it != open_by_soc_.end(); ++it) {
      if (double(it->first) > new_bound + 1e-9) break;
      if (double(it->first) > old_bound + 1e-9) focal_.insert({focal_key(*nodes_[it->second]), it->second});
    }
    lb_min_ = new_lb;
  }

  std::optional<std::size_t> pick() {
    refresh_focal();
    if (!focal_.empty()) return focal_.begin()->second;
    if (open_by_lb_.empty()) return std::nullopt;
    return open_by_lb_.begin()->second;
  }

  std::size_t current_lb(const CTNode& popped) const {
    return open_by_lb_.empty() ? popped.lb : std::min(popped.lb, open_by_lb_.begin()->first);
  }

  void run(EcbsResult& res) {
    auto root = make_root();
    if (!root) {
      res.status = SolveStatus::Infeasible;
      return;
    }
    res.root_lb = root->lb;
    res.root_noc = root->noc;
    res.generated = 1;
    lb_min_ = root->lb;
    push(root);

    while (true) {
      deadline_.check();
      if (opts_.max_expansions && res.expansions >= opts_.max_expansions) {
        res.status = SolveStatus::Exhausted;
        return;
      }
      const auto id = pick();
      if (!id) {
        res.status = SolveStatus::Exhausted;
        return;
      }
      const CTNodePtr node = nodes_[*id];
      erase(*id);
      nodes_[*id].reset();
      ++res.expansions;
      noc_history_.push_back(node->noc);
      if (opts_.record_trace) res.trace.push_back({res.expansions, node->noc, open_by_lb_.size()});

      const NodeState state = materialize(*node);
      if (opts_.hook) {
        auto verdict = opts_.hook(NodeView{*node, state, noc_history_, res.root_noc, current_lb(*node)});
        if (verdict.action == NodeVerdict::Action::Accept) {
          res.status = SolveStatus::Solved;
          res.plan = std::move(verdict.plan);
          res.accepted_by_hook = true;
          res.lb_min = current_lb(*node);
          return;
        }
        if (verdict.action == NodeVerdict::Action::Discard) continue;
      }

      Plan plan = state.plan();
      const auto conflict = first_conflict(plan);
      if (!conflict) {
        res.status = SolveStatus::Solved;
        res.lb_min = current_lb(*node);
        res.plan = std::move(plan);
        return;
      }
      for (auto& child : expand(node, state, *conflict)) {
        ++res.generated;
        push(std::move(child));
      }
    }
  }

  CTNodePtr expand_child(const CTNodePtr& parent, const NodeState& state, ConflictTable& table, const Constraint& c) {
    const auto ru = static_cast<std::size_t>(c.robot);
    ConstraintSet cs = constraints_for(*parent, c.robot);
    cs.add(c);
    const Path& old = *state.paths[ru];
    table.remove(old);
    SearchContext ctx{&oracle_, inst_.starts[ru], inst_.goals[ru], &cs, &table, horizon_cap(cs), &deadline_};
    std::optional<FocalResult> found;
    try {
      found = focal_astar(ctx, opts_.w1);
    } catch (...) {
      table.add(old);
      throw;
    }
    CTNodePtr out;
    if (found) {
      const int old_conf = table.conflicts_of(old);
      const int new_conf = table.conflicts_of(found->path);
      auto child = std::make_shared<CTNode>();
      child->parent = parent;
      child->robot = c.robot;
      child->constraint = c;
      child->f_min = std::max(state.f_min[ru], found->f_min);
      child->soc = parent->soc - (old.size() - 1) + (found->path.size() - 1);
      child->lb = parent->lb - static_cast<std::size_t>(state.f_min[ru]) + static_cast<std::size_t>(child->f_min);
      child->noc = static_cast<std::size_t>(static_cast<long>(parent->noc) - old_conf + new_conf);
      child->path = std::make_shared<const Path>(std::move(found->path));
      child->seq = next_seq_++;
      child->depth = parent->depth + 1;
      out = std::move(child);
    }
    table.add(old);
    return out;
  }

  const DistanceOracle& oracle_;
  const Instance& inst_;
  EcbsOptions opts_;
  Deadline deadline_;
  std::size_t mkpn_lb_ = 0;
  std::size_t lb_min_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<CTNodePtr> nodes_;
  std::set<std::pair<std::size_t, std::size_t>> open_by_lb_;
  std::set<std::pair<std::size_t, std::size_t>> open_by_soc_;
  std::set<std::pair<FocalKey, std::size_t>> focal_;
  std::vector<std::size_t> noc_history_;
};

inline EcbsResult solve_ecbs(const DistanceOracle& oracle, const Instance& inst, EcbsOptions opts = {}) {
  return EcbsSolver(oracle, inst, std::move(opts)).solve();
}

/// Exact CBS: ECBS with w1 = 1.
inline EcbsResult solve_cbs(const DistanceOracle& oracle, const Instance& inst, EcbsOptions opts = {}) {
  opts.w1 = 1.0;
  return solve_ecbs(oracle, inst, std::move(opts));
}

}  // namespace densemapf
