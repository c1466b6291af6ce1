#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace densemapf {

/// Dense index of a grid cell, `(j - 1) * width + (i - 1)`.
using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

/// Grid cell in 1-based column/row coordinates.
struct Vertex {
  int i = 0;
  int j = 0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Vertex& v) {
  return os << '(' << v.i << ',' << v.j << ')';
}

class InvalidVertex : public std::invalid_argument {
 public:
  explicit InvalidVertex(const Vertex& v)
      : std::invalid_argument("invalid vertex (" + std::to_string(v.i) + "," +
                              std::to_string(v.j) + ")") {}
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Unit moves in the fixed neighbor order E, W, N, S.
inline constexpr std::array<std::array<int, 2>, 4> kMoves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

/// 4-connected obstacle grid. Immutable after construction.
class GridMap {
 public:
  GridMap() = default;

  /// `blocked` is row-major with row j = 1 first.
  GridMap(int width, int height, std::vector<std::uint8_t> blocked, std::string name = {})
      : width_(width), height_(height), blocked_(std::move(blocked)), name_(std::move(name)) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("map dimensions must be positive");
    if (blocked_.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("obstacle mask does not match map dimensions");
    build();
  }

  static GridMap empty(int width, int height, std::string name = {}) {
    return GridMap(width, height, std::vector<std::uint8_t>(std::size_t(width) * height, 0),
                   name.empty() ? "empty-" + std::to_string(width) + "x" + std::to_string(height)
                                : std::move(name));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int free_count() const { return free_count_; }
  const std::string& name() const { return name_; }

  bool in_bounds(const Vertex& v) const {
    return v.i >= 1 && v.i <= width_ && v.j >= 1 && v.j <= height_;
  }
  bool is_free(const Vertex& v) const { return in_bounds(v) && !blocked_[raw(v)]; }
  bool is_free(VertexId id) const {
    return id >= 0 && id < cell_count() && !blocked_[static_cast<std::size_t>(id)];
  }

  VertexId id(const Vertex& v) const {
    if (!is_free(v)) throw InvalidVertex(v);
    return raw(v);
  }
  Vertex vertex(VertexId id) const { return {id % width_ + 1, id / width_ + 1}; }

  /// Free 4-neighbors in E, W, N, S order.
  std::vector<Vertex> neighbors(const Vertex& v) const {
    if (!is_free(v)) throw InvalidVertex(v);
    std::vector<Vertex> out;
    for (VertexId n : adjacency_[static_cast<std::size_t>(raw(v))])
      if (n != kNoVertex) out.push_back(vertex(n));
    return out;
  }

  /// Neighbor slots indexed like kMoves; absent neighbors are kNoVertex.
  const std::array<VertexId, 4>& adjacent(VertexId id) const {
    return adjacency_[static_cast<std::size_t>(id)];
  }

  /// Direction index (0..3) of the move a -> b, or -1 when not adjacent.
  int direction(VertexId a, VertexId b) const {
    const auto& adj = adjacent(a);
    for (int d = 0; d < 4; ++d)
      if (adj[d] == b) return d;
    return -1;
  }

  bool adjacent_or_equal(VertexId a, VertexId b) const { return a == b || direction(a, b) >= 0; }

  /// Connected-component label of a free cell.
  int component(VertexId id) const { return component_[static_cast<std::size_t>(id)]; }
  int component_count() const { return component_count_; }

  /// Free cells in row-major order.
  const std::vector<VertexId>& free_vertices() const { return free_; }

  bool blocked_raw(int i, int j) const {
    return blocked_[static_cast<std::size_t>((j - 1) * width_ + (i - 1))] != 0;
  }

 private:
  VertexId raw(const Vertex& v) const { return (v.j - 1) * width_ + (v.i - 1); }

  void build() {
    const auto n = static_cast<std::size_t>(cell_count());
    adjacency_.assign(n, {kNoVertex, kNoVertex, kNoVertex, kNoVertex});
    component_.assign(n, -1);
    free_.clear();
    for (VertexId id = 0; id < cell_count(); ++id) {
      if (blocked_[static_cast<std::size_t>(id)]) continue;
      free_.push_back(id);
      const Vertex v = vertex(id);
      for (int d = 0; d < 4; ++d) {
        const Vertex w{v.i + kMoves[d][0], v.j + kMoves[d][1]};
        if (is_free(w)) adjacency_[static_cast<std::size_t>(id)][d] = raw(w);
      }
    }
    free_count_ = static_cast<int>(free_.size());
    component_count_ = 0;
    std::vector<VertexId> stack;
    for (VertexId s : free_) {
      if (component_[static_cast<std::size_t>(s)] >= 0) continue;
      component_[static_cast<std::size_t>(s)] = component_count_;
      stack.push_back(s);
      while (!stack.empty()) {
        const VertexId u = stack.back();
        stack.pop_back();
        for (VertexId w : adjacency_[static_cast<std::size_t>(u)])
          if (w != kNoVertex && component_[static_cast<std::size_t>(w)] < 0) {
            component_[static_cast<std::size_t>(w)] = component_count_;
            stack.push_back(w);
          }
      }
      ++component_count_;
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
  std::string name_;
  std::vector<std::array<VertexId, 4>> adjacency_;
  std::vector<int> component_;
  std::vector<VertexId> free_;
  int free_count_ = 0;
  int component_count_ = 0;
};

using MapPtr = std::shared_ptr<const GridMap>;

/// All-pairs BFS distances over the free cells of one map.
class DistanceOracle {
 public:
  static constexpr int kUnreachable = std::numeric_limits<std::uint16_t>::max();

  explicit DistanceOracle(MapPtr map) : map_(std::move(map)) {
    const auto n = static_cast<std::size_t>(map_->cell_count());
    slot_.assign(n, -1);
    const auto& free = map_->free_vertices();
    for (std::size_t k = 0; k < free.size(); ++k) slot_[static_cast<std::size_t>(free[k])] = int(k);
    table_.assign(free.size() * free.size(), kUnreachable);
    std::vector<VertexId> queue;
    queue.reserve(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) {
      std::uint16_t* row = &table_[k * free.size()];
      queue.clear();
      queue.push_back(free[k]);
      row[k] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const VertexId u = queue[head];
        const std::uint16_t du = row[static_cast<std::size_t>(slot_[static_cast<std::size_t>(u)])];
        for (VertexId w : map_->adjacent(u)) {
          if (w == kNoVertex) continue;
          auto& dw = row[static_cast<std::size_t>(slot_[static_cast<std::size_t>(w)])];
          if (dw == kUnreachable) {
            dw = static_cast<std::uint16_t>(du + 1);
            queue.push_back(w);
          }
        }
      }
    }
  }

  const GridMap& map() const { return *map_; }
  const MapPtr& map_ptr() const { return map_; }

  /// Shortest-path length between free cells; kUnreachable when disconnected.
  int dist(VertexId from, VertexId to) const {
    const auto n = map_->free_vertices().size();
    return table_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(to)]) * n +
                  static_cast<std::size_t>(slot_[static_cast<std::size_t>(from)])];
  }

 private:
  MapPtr map_;
  std::vector<int> slot_;
  std::vector<std::uint16_t> table_;
};

/// Reads a MovingAI `.map` file. '.', 'G' and 'S' are passable; everything else blocks.
inline GridMap parse_movingai_map(std::istream& in, std::string name = {}) {
  std::string line;
  std::size_t line_no = 0;
  int width = -1, height = -1;
  bool in_grid = false;
  std::vector<std::uint8_t> blocked;
  int row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!in_grid) {
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key.empty()) continue;
      if (key == "type") continue;
      if (key == "height") {
        if (!(ls >> height) || height <= 0) throw ParseError("bad height", line_no);
      } else if (key == "width") {
        if (!(ls >> width) || width <= 0) throw ParseError("bad width", line_no);
      } else if (key == "map") {
        if (width <= 0 || height <= 0) throw ParseError("map section before dimensions", line_no);
        in_grid = true;
        blocked.assign(std::size_t(width) * height, 0);
      } else {
        throw ParseError("unexpected header token '" + key + "'", line_no);
      }
      continue;
    }
    if (row >= height) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      throw ParseError("more grid rows than declared height", line_no);
    }
    if (static_cast<int>(line.size()) < width) throw ParseError("grid row too short", line_no);
    for (int c = 0; c < width; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      const bool passable = ch == '.' || ch == 'G' || ch == 'S';
      blocked[std::size_t(row) * width + c] = passable ? 0 : 1;
    }
    ++row;
  }
  if (!in_grid) throw ParseError("missing 'map' section", line_no);
  if (row != height) throw ParseError("fewer grid rows than declared height", line_no);
  return GridMap(width, height, std::move(blocked), std::move(name));
}

inline GridMap load_movingai_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path);
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  return parse_movingai_map(in, name);
}

inline void write_movingai_map(std::ostream& out, const GridMap& map) {
  out << "type octile\nheight " << map.height() << "\nwidth " << map.width() << "\nmap\n";
  for (int j = 1; j <= map.height(); ++j) {
    for (int i = 1; i <= map.width(); ++i) out << (map.blocked_raw(i, j) ? '@' : '.');
    out << '\n';
  }
}

/// 24x18 warehouse-style layout with 36 horizontal 2x1 shelves (360 free cells).
inline GridMap warehouse_map() {
  constexpr int w = 24, h = 18;
  std::vector<std::uint8_t> blocked(std::size_t(w) * h, 0);
  constexpr std::array<int, 6> shelf_rows{3, 5, 7, 12, 14, 16};
  constexpr std::array<int, 6> shelf_cols{3, 6, 9, 14, 17, 20};
  for (int j : shelf_rows)
    for (int i : shelf_cols) {
      blocked[std::size_t(j - 1) * w + (i - 1)] = 1;
      blocked[std::size_t(j - 1) * w + i] = 1;
    }
  return GridMap(w, h, std::move(blocked), "warehouse-24x18");
}

}  // namespace densemapf
