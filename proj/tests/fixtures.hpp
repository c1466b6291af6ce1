#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "densemapf/ecbs.hpp"
#include "densemapf/random.hpp"
#include "densemapf/scbs.hpp"

namespace fixtures {

using namespace densemapf;

struct PhaseCase {
  MapPtr map;
  std::vector<Plan> phases;
};

/// Three consecutive ECBS plans through random configurations on a small
/// random map: A -> B -> C -> D. Empty when a phase fails.
inline std::optional<PhaseCase> random_three_phase(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  const int w = 5 + int(uniform_below(rng, 5)), h = 5 + int(uniform_below(rng, 5));
  const auto map = std::make_shared<const GridMap>(random_obstacle_map(w, h, 0.15, rng));
  const DistanceOracle oracle(map);
  const auto& free = map->free_vertices();
  const std::size_t n = 2 + uniform_below(rng, std::min<std::size_t>(9, free.size() / 3));
  std::vector<Configuration> configs;
  for (int k = 0; k < 4; ++k) configs.push_back(sample_without_replacement(free, n, rng));
  std::vector<Plan> phases;
  for (int k = 0; k < 3; ++k) {
    Instance inst;
    inst.map = map;
    inst.starts = configs[std::size_t(k)];
    inst.goals = configs[std::size_t(k) + 1];
    EcbsOptions opts;
    opts.time_limit = 5;
    auto res = solve_ecbs(oracle, inst, opts);
    if (!res.solved()) return std::nullopt;
    phases.push_back(std::move(res.plan));
  }
  return PhaseCase{map, std::move(phases)};
}

/// Instance whose start and goal configurations are the phases' ends.
inline Instance phase_instance(const MapPtr& map, const std::vector<Plan>& phases) {
  Instance inst;
  inst.map = map;
  for (std::size_t r = 0; r < phases.front().size(); ++r) {
    inst.starts.push_back(phases.front()[r].front());
    inst.goals.push_back(phases.back()[r].back());
  }
  return inst;
}

/// Same vertex sequence once waits are removed.
inline bool same_route(const Path& a, const Path& b) {
  auto collapse = [](const Path& p) {
    Path out;
    for (VertexId v : p)
      if (out.empty() || out.back() != v) out.push_back(v);
    return out;
  };
  return collapse(a) == collapse(b);
}

}  // namespace fixtures
