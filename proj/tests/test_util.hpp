#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "densemapf/grid.hpp"
#include "densemapf/instance.hpp"
#include "densemapf/plan.hpp"

namespace testutil {

using namespace densemapf;

/// Map from rows of '.'/'@'; the first string is row j = 1.
inline MapPtr map_from_rows(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  std::vector<std::uint8_t> blocked;
  for (const auto& r : rows)
    for (char c : r) blocked.push_back(c == '.' ? 0 : 1);
  return std::make_shared<const GridMap>(w, h, std::move(blocked), "test");
}

inline MapPtr empty_map(int w, int h) { return std::make_shared<const GridMap>(GridMap::empty(w, h)); }

inline VertexId at_xy(const GridMap& m, int i, int j) { return m.id(Vertex{i, j}); }

inline Path path_of(const GridMap& m, const std::vector<std::pair<int, int>>& cells) {
  Path p;
  for (auto [i, j] : cells) p.push_back(m.id(Vertex{i, j}));
  return p;
}

inline Instance make_instance(MapPtr map, Configuration s, Configuration g) {
  Instance inst;
  inst.map = std::move(map);
  inst.starts = std::move(s);
  inst.goals = std::move(g);
  return inst;
}

inline bool valid(const Instance& inst, const Plan& plan) {
  return validate_plan(*inst.map, inst, plan).empty();
}

}  // namespace testutil
