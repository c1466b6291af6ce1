#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace densemapf {

/// One vertex per robot, indexed by robot.
using Configuration = std::vector<VertexId>;

/// Map plus labeled start and goal configurations.
struct Instance {
  MapPtr map;
  Configuration starts;
  Configuration goals;
  std::uint64_t seed = 0;
  std::string generator;
  std::map<std::string, double> params;

  std::size_t size() const { return starts.size(); }
};

class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidInstance unless the configurations are free, pairwise
/// distinct, equally sized and (when asked) each s_i shares a component with g_i.
inline void check_instance(const Instance& inst, bool require_connected = true) {
  if (!inst.map) throw InvalidInstance("instance has no map");
  if (inst.starts.size() != inst.goals.size())
    throw InvalidInstance("start and goal configurations differ in size");
  const auto& map = *inst.map;
  auto check_config = [&](const Configuration& c, const char* what) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(map.cell_count()), 0);
    for (VertexId v : c) {
      if (!map.is_free(v)) throw InvalidInstance(std::string(what) + " vertex is not free");
      if (seen[static_cast<std::size_t>(v)]++)
        throw InvalidInstance(std::string(what) + " configuration repeats a vertex");
    }
  };
  check_config(inst.starts, "start");
  check_config(inst.goals, "goal");
  if (!require_connected) return;
  for (std::size_t r = 0; r < inst.size(); ++r)
    if (map.component(inst.starts[r]) != map.component(inst.goals[r]))
      throw InvalidInstance("robot " + std::to_string(r) + " cannot reach its goal");
}

}  // namespace densemapf
