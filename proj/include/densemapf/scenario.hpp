#pragma once

// Instance generators and the .scen / JSON sidecar instance format.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "grid.hpp"
#include "instance.hpp"
#include "random.hpp"

namespace densemapf {

class CapacityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Free cells of the largest connected component, row-major.
inline std::vector<VertexId> largest_component(const GridMap& map) {
  std::vector<int> sizes(static_cast<std::size_t>(map.component_count()), 0);
  for (VertexId v : map.free_vertices()) ++sizes[static_cast<std::size_t>(map.component(v))];
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<VertexId> out;
  for (VertexId v : map.free_vertices())
    if (map.component(v) == best) out.push_back(v);
  return out;
}

}  // namespace detail

/// Starts and goals drawn independently and uniformly without replacement.
/// Sampling is restricted to the largest component so every pair is connected.
inline Instance gen_uniform(MapPtr map, std::size_t n, std::uint64_t seed) {
  const auto pool = detail::largest_component(*map);
  if (n > pool.size())
    throw CapacityError("requested " + std::to_string(n) + " robots but only " +
                        std::to_string(pool.size()) + " connected free cells");
  Rng rng(seed);
  Instance inst;
  inst.map = std::move(map);
  inst.starts = sample_without_replacement(pool, n, rng);
  inst.goals = sample_without_replacement(pool, n, rng);
  inst.seed = seed;
  inst.generator = "uniform";
  inst.params["robots"] = double(n);
  return inst;
}

/// Side of the corner square used for k robots.
inline int corner_side(std::size_t k) {
  int side = static_cast<int>(std::sqrt(double(k)));
  while (std::size_t(side) * std::size_t(side) < k) ++side;
  return std::max(side, 1);
}

/// Starts and goals sampled independently inside the side x side square
/// anchored at (1, 1), side = ceil(sqrt(k)).
inline Instance gen_corner_rearrangement(MapPtr map, std::size_t k, std::uint64_t seed) {
  const int side = corner_side(k);
  if (side > map->width() || side > map->height())
    throw CapacityError("corner square does not fit the map");
  std::vector<VertexId> pool;
  for (int j = 1; j <= side; ++j)
    for (int i = 1; i <= side; ++i)
      if (map->is_free(Vertex{i, j})) pool.push_back(map->id(Vertex{i, j}));
  if (k > pool.size()) throw CapacityError("corner square has too few free cells");
  Rng rng(seed);
  Instance inst;
  inst.map = std::move(map);
  inst.starts = sample_without_replacement(pool, k, rng);
  inst.goals = sample_without_replacement(pool, k, rng);
  inst.seed = seed;
  inst.generator = "corner";
  inst.params["robots"] = double(k);
  inst.params["side"] = double(side);
  return inst;
}

/// Gaussian-clustered instance on an empty map sized to hold every sample
/// plus a free margin of ceil(3 sigma). Starts and goals use independent
/// streams derived from `seed`.
inline Instance gen_gaussian(std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  using Point = std::pair<long, long>;
  auto draw = [&](std::uint64_t stream_seed) {
    Rng rng(stream_seed);
    std::set<Point> used;
    std::vector<Point> pts;
    while (pts.size() < n) {
      const double x = sigma * standard_normal(rng);
      const double y = sigma * standard_normal(rng);
      const Point p{static_cast<long>(std::floor(x)), static_cast<long>(std::floor(y))};
      if (used.insert(p).second) pts.push_back(p);
    }
    return pts;
  };
  const auto starts = draw(mix_seed(seed));
  const auto goals = draw(mix_seed(seed ^ 0x5bd1e995u));
  long min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  bool first = true;
  for (const auto* pts : {&starts, &goals})
    for (const auto& [x, y] : *pts) {
      if (first) {
        min_x = max_x = x;
        min_y = max_y = y;
        first = false;
      }
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  const long margin = static_cast<long>(std::ceil(3.0 * sigma));
  const int w = static_cast<int>(max_x - min_x + 1 + 2 * margin);
  const int h = static_cast<int>(max_y - min_y + 1 + 2 * margin);
  auto map = std::make_shared<const GridMap>(
      GridMap::empty(w, h, "gauss-" + std::to_string(w) + "x" + std::to_string(h)));
  auto to_id = [&](const Point& p) {
    return map->id(Vertex{static_cast<int>(p.first - min_x + margin + 1),
                          static_cast<int>(p.second - min_y + margin + 1)});
  };
  Instance inst;
  inst.map = map;
  for (const auto& p : starts) inst.starts.push_back(to_id(p));
  for (const auto& p : goals) inst.goals.push_back(to_id(p));
  inst.seed = seed;
  inst.generator = "gauss";
  inst.params["robots"] = double(n);
  inst.params["sigma"] = sigma;
  return inst;
}

// ---------------------------------------------------------------------------
// Persistence. `<stem>.scen` holds MovingAI-style rows (0-based x/y), the
// sidecar `<stem>.json` carries generator metadata, and `<stem>.map` is
// written next to them so an instance is self-contained.

inline void save_instance(const Instance& inst, const std::filesystem::path& scen_path,
                          const DistanceOracle* oracle = nullptr) {
  namespace fs = std::filesystem;
  if (scen_path.has_parent_path()) fs::create_directories(scen_path.parent_path());
  const fs::path map_path = fs::path(scen_path).replace_extension(".map");
  {
    std::ofstream out(map_path);
    if (!out) throw std::runtime_error("cannot write " + map_path.string());
    write_movingai_map(out, *inst.map);
  }
  {
    std::ofstream out(scen_path);
    if (!out) throw std::runtime_error("cannot write " + scen_path.string());
    out << "version 1\n";
    const auto& map = *inst.map;
    for (std::size_t r = 0; r < inst.size(); ++r) {
      const Vertex s = map.vertex(inst.starts[r]);
      const Vertex g = map.vertex(inst.goals[r]);
      const int d = oracle ? oracle->dist(inst.starts[r], inst.goals[r])
                           : std::abs(s.i - g.i) + std::abs(s.j - g.j);
      out << 0 << '\t' << map_path.filename().string() << '\t' << map.width() << '\t'
          << map.height() << '\t' << s.i - 1 << '\t' << s.j - 1 << '\t' << g.i - 1 << '\t'
          << g.j - 1 << '\t' << d << '\n';
    }
  }
  nlohmann::json meta;
  meta["generator"] = inst.generator;
  meta["seed"] = inst.seed;
  meta["robots"] = inst.size();
  meta["map"] = map_path.filename().string();
  meta["params"] = inst.params;
  if (inst.generator == "gauss") meta["streams"] = "independent";
  std::ofstream out(fs::path(scen_path).replace_extension(".json"));
  out << meta.dump(2) << '\n';
}

/// Loads a .scen file; the map is resolved relative to the scen's directory.
inline Instance load_instance(const std::filesystem::path& scen_path) {
  namespace fs = std::filesystem;
  std::ifstream in(scen_path);
  if (!in) throw std::runtime_error("cannot open " + scen_path.string());
  std::string line;
  std::size_t line_no = 0;
  Instance inst;
  std::string map_name;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("version", 0) == 0) continue;
    std::istringstream ls(line);
    int bucket, w, h, sx, sy, gx, gy;
    double opt;
    std::string name;
    if (!(ls >> bucket >> name >> w >> h >> sx >> sy >> gx >> gy >> opt))
      throw ParseError("malformed scenario row", line_no);
    if (!inst.map) {
      map_name = name;
      fs::path mp = scen_path.parent_path() / name;
      if (!fs::exists(mp)) throw ParseError("map file " + mp.string() + " not found", line_no);
      inst.map = std::make_shared<const GridMap>(load_movingai_map(mp.string()));
    } else if (name != map_name) {
      throw ParseError("scenario references more than one map", line_no);
    }
    if (w != inst.map->width() || h != inst.map->height())
      throw ParseError("map dimensions do not match", line_no);
    const Vertex s{sx + 1, sy + 1}, g{gx + 1, gy + 1};
    if (!inst.map->is_free(s) || !inst.map->is_free(g))
      throw ParseError("start or goal is not a free cell", line_no);
    inst.starts.push_back(inst.map->id(s));
    inst.goals.push_back(inst.map->id(g));
  }
  if (!inst.map) throw ParseError("scenario has no robots", line_no);
  const fs::path sidecar = fs::path(scen_path).replace_extension(".json");
  if (fs::exists(sidecar)) {
    std::ifstream js(sidecar);
    try {
      const auto meta = nlohmann::json::parse(js);
      inst.generator = meta.value("generator", std::string{});
      inst.seed = meta.value("seed", std::uint64_t{0});
      if (meta.contains("params")) inst.params = meta["params"].get<std::map<std::string, double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("sidecar: ") + e.what(), 0);
    }
  }
  return inst;
}

}  // namespace densemapf
