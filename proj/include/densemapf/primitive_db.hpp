#pragma once

// Min-makespan joint solutions for every labeled start/goal pair on obstacle
// free 2x3 and 3x3 subgrids.
//
// Robots are relabeled so that goals appear in row-major order; a table is
// then keyed by the goal cell subset and indexed by the rank of the start
// state as a k-permutation of the cells. Each entry stores the distance to the
// goal and one optimal first joint move, so sequences are rebuilt by walking.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "grid.hpp"
#include "plan.hpp"

namespace densemapf {

/// Subgrid shapes as rows x columns. 3x2 is served by transposing 2x3.
enum class SubgridShape : std::uint8_t { k2x3 = 0, k3x2 = 1, k3x3 = 2 };

inline int shape_rows(SubgridShape s) { return s == SubgridShape::k2x3 ? 2 : 3; }
inline int shape_cols(SubgridShape s) { return s == SubgridShape::k3x2 ? 2 : 3; }
inline int shape_cells(SubgridShape s) { return shape_rows(s) * shape_cols(s); }
inline const char* to_string(SubgridShape s) {
  switch (s) {
    case SubgridShape::k2x3: return "2x3";
    case SubgridShape::k3x2: return "3x2";
    case SubgridShape::k3x3: return "3x3";
  }
  return "?";
}

/// Joint positions inside a subgrid, as local cell indices (row-major).
using JointState = std::vector<int>;

class DbFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace db_detail {

inline constexpr std::uint8_t kUnreached = 0xFF;
inline constexpr int kMaxCells = 9;

/// Local move codes: 0 wait, 1 +col, 2 -col, 3 +row, 4 -row.
inline constexpr std::array<int, 5> kInverse{0, 2, 1, 4, 3};

inline std::uint64_t falling_factorial(int n, int m) {
  std::uint64_t r = 1;
  for (int i = 0; i < m; ++i) r *= std::uint64_t(n - i);
  return r;
}

/// Neighborhood of a rows x cols rectangle.
struct Layout {
  int rows = 0;
  int cols = 0;
  int cells = 0;
  // target[cell][code], -1 when off-grid
  std::array<std::array<int, 5>, kMaxCells> target{};

  Layout(int r, int c) : rows(r), cols(c), cells(r * c) {
    for (int cell = 0; cell < cells; ++cell) {
      const int row = cell / cols, col = cell % cols;
      target[cell] = {cell, col + 1 < cols ? cell + 1 : -1, col > 0 ? cell - 1 : -1,
                      row + 1 < rows ? cell + cols : -1, row > 0 ? cell - cols : -1};
    }
  }
};

/// Ranking of k-permutations of `cells` items.
struct PermRanker {
  int cells = 0;
  int k = 0;
  std::array<std::uint64_t, kMaxCells> mult{};

  PermRanker(int c, int kk) : cells(c), k(kk) {
    for (int i = 0; i < k; ++i) mult[i] = falling_factorial(cells - 1 - i, k - 1 - i);
  }
  std::uint64_t size() const { return falling_factorial(cells, k); }

  std::uint64_t rank(const int* pos) const {
    std::uint64_t r = 0;
    unsigned used = 0;
    for (int i = 0; i < k; ++i) {
      const unsigned below = (1u << pos[i]) - 1u;
      r += std::uint64_t(std::popcount(below & ~used)) * mult[i];
      used |= 1u << pos[i];
    }
    return r;
  }

  void unrank(std::uint64_t r, int* pos) const {
    unsigned used = 0;
    for (int i = 0; i < k; ++i) {
      auto digit = static_cast<int>(r / mult[i]);
      r %= mult[i];
      for (int c = 0; c < cells; ++c) {
        if (used & (1u << c)) continue;
        if (digit-- == 0) {
          pos[i] = c;
          used |= 1u << c;
          break;
        }
      }
    }
  }
};

/// Enumerates every legal joint move from `pos`: targets pairwise distinct,
/// no two robots swapping along one edge. `fn(codes, rank)` receives the move
/// codes and the rank of the successor; returning false stops the enumeration.
template <class Fn>
bool for_each_joint_move(const Layout& layout, const PermRanker& ranker, const int* pos, Fn&& fn) {
  const int k = ranker.k;
  std::array<int, kMaxCells> occupant;
  occupant.fill(-1);
  for (int r = 0; r < k; ++r) occupant[pos[r]] = r;
  std::array<int, kMaxCells> next{}, code{};
  auto rec = [&](auto&& self, int r, unsigned claimed, std::uint64_t partial) -> bool {
    if (r == k) return fn(code.data(), partial);
    for (int m = 0; m < 5; ++m) {
      const int to = layout.target[pos[r]][m];
      if (to < 0 || (claimed & (1u << to))) continue;
      if (m != 0) {
        const int q = occupant[to];
        if (q >= 0 && q < r && next[q] == pos[r]) continue;  // swap with an earlier robot
      }
      next[r] = to;
      code[r] = m;
      const auto digit = std::uint64_t(std::popcount(((1u << to) - 1u) & ~claimed));
      if (!self(self, r + 1, claimed | (1u << to), partial + digit * ranker.mult[r])) return false;
    }
    return true;
  };
  return rec(rec, 0, 0u, 0);
}

struct Table {
  std::vector<std::uint8_t> dist;
  std::vector<std::uint32_t> move;  // 3 bits per robot
};

/// Breadth-first search from the canonical goal state of `goal_mask`. Small
/// frontiers are expanded outward; once the frontier is large, every unreached
/// state instead looks for one neighbor on the frontier and stops there.
inline Table solve_subset(const Layout& layout, unsigned goal_mask) {
  const int k = std::popcount(goal_mask);
  const PermRanker ranker(layout.cells, k);
  const std::uint64_t n = ranker.size();
  Table tab;
  tab.dist.assign(n, kUnreached);
  tab.move.assign(n, 0);
  std::array<int, kMaxCells> goal{};
  for (int c = 0, r = 0; c < layout.cells; ++c)
    if (goal_mask & (1u << c)) goal[r++] = c;
  std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(ranker.rank(goal.data()))}, next;
  tab.dist[frontier[0]] = 0;
  std::uint64_t unreached = n - 1;
  std::array<int, kMaxCells> pos{};
  auto pack = [k](const int* codes, bool invert) {
    std::uint32_t mv = 0;
    for (int i = 0; i < k; ++i) mv |= std::uint32_t(invert ? kInverse[codes[i]] : codes[i]) << (3 * i);
    return mv;
  };
  for (std::uint8_t d = 0; !frontier.empty() && unreached > 0; ++d) {
    if (d == kUnreached - 1) throw std::runtime_error("primitive database depth overflow");
    next.clear();
    if (frontier.size() * 8 < unreached) {
      for (std::uint32_t cur : frontier) {
        ranker.unrank(cur, pos.data());
        for_each_joint_move(layout, ranker, pos.data(), [&](const int* codes, std::uint64_t r) {
          if (tab.dist[r] == kUnreached) {
            tab.dist[r] = static_cast<std::uint8_t>(d + 1);
            tab.move[r] = pack(codes, true);
            next.push_back(static_cast<std::uint32_t>(r));
          }
          return true;
        });
      }
    } else {
      for (std::uint64_t s = 0; s < n; ++s) {
        if (tab.dist[s] != kUnreached) continue;
        ranker.unrank(s, pos.data());
        for_each_joint_move(layout, ranker, pos.data(), [&](const int* codes, std::uint64_t r) {
          if (tab.dist[r] != d) return true;
          tab.move[s] = pack(codes, false);
          next.push_back(static_cast<std::uint32_t>(s));
          return false;
        });
      }
      for (std::uint32_t s : next) tab.dist[s] = static_cast<std::uint8_t>(d + 1);
    }
    unreached -= next.size();
    std::swap(frontier, next);
  }
  return tab;
}

/// Cell subsets of size k in increasing mask order.
inline std::vector<unsigned> subsets(int cells, int k) {
  std::vector<unsigned> out;
  for (unsigned m = 0; m < (1u << cells); ++m)
    if (std::popcount(m) == k) out.push_back(m);
  return out;
}

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace db_detail

/// Result of a database lookup: the joint states from start (index 0) to goal.
struct DbPlan {
  int makespan = 0;
  std::vector<JointState> states;
};

/// Database for one canonical shape (2x3 or 3x3). Tables outside the generated
/// robot-count range are solved on first use and memoized.
class PrimitiveDb {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;
  static constexpr char kMagic[8] = {'D', 'M', 'A', 'P', 'F', 'D', 'B', '\0'};

  PrimitiveDb(const PrimitiveDb&) = delete;
  PrimitiveDb& operator=(const PrimitiveDb&) = delete;
  PrimitiveDb(PrimitiveDb&& o) noexcept
      : shape_(o.shape_), layout_(o.layout_), k_min_(o.k_min_), k_max_(o.k_max_), tables_(std::move(o.tables_)) {}

  /// Builds tables for robot counts in [k_min, k_max]. Work is split across
  /// goal subsets on `threads` workers.
  static PrimitiveDb generate(SubgridShape shape, int k_min = 1, int k_max = -1, unsigned threads = 1) {
    if (shape == SubgridShape::k3x2) throw std::invalid_argument("generate 2x3; 3x2 is its transpose");
    PrimitiveDb db(shape);
    if (k_max < 0) k_max = db.layout_.cells;
    k_min = std::max(k_min, 1);
    k_max = std::min(k_max, db.layout_.cells);
    db.k_min_ = k_min;
    db.k_max_ = k_max;
    std::vector<unsigned> work;
    for (int k = k_min; k <= k_max; ++k)
      for (unsigned m : db_detail::subsets(db.layout_.cells, k)) work.push_back(m);
    threads = std::max(1u, threads);
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
        auto tab = std::make_shared<const db_detail::Table>(db_detail::solve_subset(db.layout_, work[i]));
        db.tables_[work[i]] = std::move(tab);
      }
    };
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return db;
  }

  SubgridShape shape() const { return shape_; }
  int rows() const { return layout_.rows; }
  int cols() const { return layout_.cols; }
  int cells() const { return layout_.cells; }
  int k_min() const { return k_min_; }
  int k_max() const { return k_max_; }

  /// Min makespan from `starts` to `goals` (local cells of this shape), or
  /// nothing when the goal is unreachable.
  std::optional<int> makespan(std::span<const int> starts, std::span<const int> goals) const {
    const auto canon = canonicalize(starts, goals);
    const auto& tab = table(canon.mask);
    const db_detail::PermRanker ranker(layout_.cells, int(starts.size()));
    const auto d = tab.dist[ranker.rank(canon.start.data())];
    if (d == db_detail::kUnreached) return std::nullopt;
    return int(d);
  }

  /// Optimal joint motion by following the stored first moves.
  std::optional<DbPlan> query(std::span<const int> starts, std::span<const int> goals) const {
    const int k = static_cast<int>(starts.size());
    const auto canon = canonicalize(starts, goals);
    const auto& tab = table(canon.mask);
    const db_detail::PermRanker ranker(layout_.cells, k);
    std::array<int, db_detail::kMaxCells> pos{};
    std::copy(canon.start.begin(), canon.start.end(), pos.begin());
    auto r = ranker.rank(pos.data());
    if (tab.dist[r] == db_detail::kUnreached) return std::nullopt;
    DbPlan out;
    out.makespan = tab.dist[r];
    auto emit = [&] {
      JointState s(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(canon.label[static_cast<std::size_t>(i)])] = pos[static_cast<std::size_t>(i)];
      out.states.push_back(std::move(s));
    };
    emit();
    while (tab.dist[r] != 0) {
      const std::uint32_t mv = tab.move[r];
      for (int i = 0; i < k; ++i) pos[static_cast<std::size_t>(i)] = layout_.target[pos[static_cast<std::size_t>(i)]][(mv >> (3 * i)) & 7u];
      r = ranker.rank(pos.data());
      emit();
    }
    return out;
  }

  /// Number of tables currently held (generated or memoized).
  std::size_t table_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& t : tables_)
      if (t) ++n;
    return n;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write(out);
  }

  static PrimitiveDb load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read(in);
  }

  /// Layout: magic, version, shape, rows, cols, k_min, k_max, table count,
  /// (mask, offset, entries) per table, checksum, then per table the distance
  /// bytes followed by the little-endian move words.
  void write(std::ostream& out) const {
    std::vector<unsigned> masks;
    for (int k = k_min_; k <= k_max_; ++k)
      for (unsigned m : db_detail::subsets(layout_.cells, k)) masks.push_back(m);
    std::vector<char> payload;
    std::vector<std::uint64_t> offsets;
    for (unsigned m : masks) {
      const auto& tab = table(m);
      offsets.push_back(payload.size());
      const auto* d = reinterpret_cast<const char*>(tab.dist.data());
      payload.insert(payload.end(), d, d + tab.dist.size());
      for (std::uint32_t w : tab.move)
        for (int b = 0; b < 4; ++b) payload.push_back(static_cast<char>((w >> (8 * b)) & 0xFF));
    }
    auto put = [&](auto v) {
      for (std::size_t b = 0; b < sizeof(v); ++b) out.put(static_cast<char>((std::uint64_t(v) >> (8 * b)) & 0xFF));
    };
    out.write(kMagic, sizeof(kMagic));
    put(kFormatVersion);
    put(static_cast<std::uint8_t>(shape_));
    put(static_cast<std::uint8_t>(layout_.rows));
    put(static_cast<std::uint8_t>(layout_.cols));
    put(static_cast<std::uint8_t>(k_min_));
    put(static_cast<std::uint8_t>(k_max_));
    put(static_cast<std::uint32_t>(masks.size()));
    for (std::size_t i = 0; i < masks.size(); ++i) {
      put(static_cast<std::uint32_t>(masks[i]));
      put(offsets[i]);
      put(static_cast<std::uint64_t>(table(masks[i]).dist.size()));
    }
    put(db_detail::fnv1a(0xcbf29ce484222325ULL, payload.data(), payload.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("database write failed");
  }

  static PrimitiveDb read(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
      throw DbFormatError("not a primitive database (bad magic)");
    auto get = [&](auto& v) {
      std::uint64_t x = 0;
      for (std::size_t b = 0; b < sizeof(v); ++b) {
        const int c = in.get();
        if (c == EOF) throw DbFormatError("truncated database header");
        x |= std::uint64_t(static_cast<unsigned char>(c)) << (8 * b);
      }
      v = static_cast<std::remove_reference_t<decltype(v)>>(x);
    };
    std::uint32_t version;
    get(version);
    if (version != kFormatVersion) throw DbFormatError("unsupported database version " + std::to_string(version));
    std::uint8_t shape, rows, cols, k_min, k_max;
    get(shape), get(rows), get(cols), get(k_min), get(k_max);
    if (shape > 2) throw DbFormatError("unknown shape");
    PrimitiveDb db(static_cast<SubgridShape>(shape));
    if (rows != db.layout_.rows || cols != db.layout_.cols) throw DbFormatError("shape dimensions mismatch");
    db.k_min_ = k_min;
    db.k_max_ = k_max;
    std::uint32_t count;
    get(count);
    struct Entry {
      std::uint32_t mask;
      std::uint64_t offset, size;
    };
    std::vector<Entry> entries(count);
    for (auto& e : entries) get(e.mask), get(e.offset), get(e.size);
    std::uint64_t checksum;
    get(checksum);
    std::uint64_t total = 0;
    for (const auto& e : entries) {
      if (e.size > (std::uint64_t(1) << 32)) throw DbFormatError("corrupt table index");
      total += e.size * 5;
    }
    std::vector<char> payload(total);
    if (!in.read(payload.data(), static_cast<std::streamsize>(total))) throw DbFormatError("truncated database payload");
    if (db_detail::fnv1a(0xcbf29ce484222325ULL, payload.data(), payload.size()) != checksum)
      throw DbFormatError("database checksum mismatch");
    for (const auto& e : entries) {
      if (e.mask >= (1u << db.layout_.cells) || e.offset + e.size * 5 > payload.size())
        throw DbFormatError("corrupt table index");
      auto tab = std::make_shared<db_detail::Table>();
      const auto* base = reinterpret_cast<const std::uint8_t*>(payload.data() + e.offset);
      tab->dist.assign(base, base + e.size);
      tab->move.resize(e.size);
      for (std::uint64_t i = 0; i < e.size; ++i) {
        const auto* w = base + e.size + 4 * i;
        tab->move[i] = std::uint32_t(w[0]) | std::uint32_t(w[1]) << 8 | std::uint32_t(w[2]) << 16 | std::uint32_t(w[3]) << 24;
      }
      db.tables_[e.mask] = std::move(tab);
    }
    return db;
  }

 private:
  explicit PrimitiveDb(SubgridShape shape)
      : shape_(shape), layout_(shape_rows(shape), shape_cols(shape)), tables_(std::size_t(1) << layout_.cells) {}

  struct Canonical {
    unsigned mask = 0;
    std::vector<int> start;  // canonical robot i start
    std::vector<int> label;  // canonical robot i -> caller's index
  };

  Canonical canonicalize(std::span<const int> starts, std::span<const int> goals) const {
    if (starts.size() != goals.size() || starts.empty() || starts.size() > std::size_t(layout_.cells))
      throw std::invalid_argument("database query needs 1..cells robots with matching goals");
    Canonical c;
    c.label.resize(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) c.label[i] = static_cast<int>(i);
    std::sort(c.label.begin(), c.label.end(), [&](int a, int b) { return goals[std::size_t(a)] < goals[std::size_t(b)]; });
    unsigned smask = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const int g = goals[i], s = starts[i];
      if (g < 0 || g >= layout_.cells || s < 0 || s >= layout_.cells)
        throw std::invalid_argument("database query cell out of range");
      if (c.mask & (1u << g)) throw std::invalid_argument("database query goals repeat");
      if (smask & (1u << s)) throw std::invalid_argument("database query starts repeat");
      c.mask |= 1u << g;
      smask |= 1u << s;
    }
    for (int l : c.label) c.start.push_back(starts[std::size_t(l)]);
    return c;
  }

  const db_detail::Table& table(unsigned mask) const {
    std::lock_guard lock(mutex_);
    auto& slot = tables_[mask];
    if (!slot) slot = std::make_shared<const db_detail::Table>(db_detail::solve_subset(layout_, mask));
    return *slot;
  }

  SubgridShape shape_;
  db_detail::Layout layout_;
  int k_min_ = 1;
  int k_max_ = 0;
  mutable std::mutex mutex_;
  mutable std::vector<std::shared_ptr<const db_detail::Table>> tables_;
};


/// The 2x3 and 3x3 databases together, stored back to back in one file.
class DbBundle {
 public:
  static constexpr const char* kEnvVar = "DMAPF_DB";

  DbBundle(PrimitiveDb small, PrimitiveDb big) : small_(std::move(small)), big_(std::move(big)) {
    if (small_.shape() != SubgridShape::k2x3 || big_.shape() != SubgridShape::k3x3)
      throw std::invalid_argument("bundle needs a 2x3 and a 3x3 database");
  }

  /// Robot counts in [1, k_max] are built up front; the rest on first use.
  static DbBundle generate(int k_max = -1, unsigned threads = 1) {
    return DbBundle(PrimitiveDb::generate(SubgridShape::k2x3, 1, k_max, threads),
                    PrimitiveDb::generate(SubgridShape::k3x3, 1, k_max, threads));
  }

  /// Empty tables everywhere; every query solves its table on demand.
  static DbBundle lazy() { return generate(0); }

  const PrimitiveDb& for_shape(SubgridShape s) const { return s == SubgridShape::k3x3 ? big_ : small_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    small_.write(out);
    big_.write(out);
  }

  static DbBundle load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    auto small = PrimitiveDb::read(in);
    auto big = PrimitiveDb::read(in);
    return DbBundle(std::move(small), std::move(big));
  }

  /// Loads `path` when given, else the file named by DMAPF_DB, else nothing.
  static std::optional<DbBundle> locate(const std::optional<std::filesystem::path>& path = std::nullopt) {
    if (path) return load(*path);
    if (const char* env = std::getenv(kEnvVar); env && *env) return load(env);
    return std::nullopt;
  }

 private:
  PrimitiveDb small_;
  PrimitiveDb big_;
};

/// Placement of a subgrid on a host map. `anchor` is the cell with the
/// smallest coordinates. Local cells are numbered in the layout of the
/// database that serves the shape, so 3x2 placements are transposed onto 2x3.
struct SubgridSpec {
  Vertex anchor;
  SubgridShape shape = SubgridShape::k2x3;

  int width() const { return shape_cols(shape); }
  int height() const { return shape_rows(shape); }
  SubgridShape db_shape() const { return shape == SubgridShape::k3x2 ? SubgridShape::k2x3 : shape; }

  bool contains(Vertex p) const {
    return p.i >= anchor.i && p.i < anchor.i + width() && p.j >= anchor.j && p.j < anchor.j + height();
  }
  bool contains(const GridMap& map, VertexId v) const { return contains(map.vertex(v)); }

  int local_of(const GridMap& map, VertexId v) const {
    const Vertex p = map.vertex(v);
    if (!contains(p)) throw std::out_of_range("vertex outside subgrid");
    const int c = p.i - anchor.i, r = p.j - anchor.j;
    return shape == SubgridShape::k3x2 ? c * 3 + r : r * width() + c;
  }

  VertexId vertex_of(const GridMap& map, int local) const {
    int r, c;
    if (shape == SubgridShape::k3x2) {
      c = local / 3;
      r = local % 3;
    } else {
      r = local / width();
      c = local % width();
    }
    return map.id(Vertex{anchor.i + c, anchor.j + r});
  }

  std::vector<VertexId> cells(const GridMap& map) const {
    std::vector<VertexId> out;
    for (int l = 0; l < shape_cells(shape); ++l) out.push_back(vertex_of(map, l));
    return out;
  }

  bool fits(const GridMap& map) const {
    for (int dj = 0; dj < height(); ++dj)
      for (int di = 0; di < width(); ++di)
        if (!map.is_free(Vertex{anchor.i + di, anchor.j + dj})) return false;
    return true;
  }
};

/// Every placement that fits the map and holds all `must`, in preference
/// order: 2x3, then 3x2, then 3x3, each by anchor in row-major order.
inline std::vector<SubgridSpec> enclosing_subgrids(const GridMap& map, std::span<const VertexId> must) {
  std::vector<SubgridSpec> out;
  if (must.empty()) return out;
  int lo_i = 1 << 30, hi_i = 0, lo_j = 1 << 30, hi_j = 0;
  for (VertexId v : must) {
    const Vertex p = map.vertex(v);
    lo_i = std::min(lo_i, p.i), hi_i = std::max(hi_i, p.i);
    lo_j = std::min(lo_j, p.j), hi_j = std::max(hi_j, p.j);
  }
  for (auto shape : {SubgridShape::k2x3, SubgridShape::k3x2, SubgridShape::k3x3}) {
    const int w = shape_cols(shape), h = shape_rows(shape);
    for (int j = hi_j - h + 1; j <= lo_j; ++j)
      for (int i = hi_i - w + 1; i <= lo_i; ++i) {
        const SubgridSpec spec{Vertex{i, j}, shape};
        if (spec.fits(map)) out.push_back(spec);
      }
  }
  return out;
}

inline std::optional<SubgridSpec> find_enclosing_subgrid(const GridMap& map, std::span<const VertexId> must) {
  auto all = enclosing_subgrids(map, must);
  if (all.empty()) return std::nullopt;
  return all.front();
}

/// Subgrid for a conflict: holds both robots at the step before the conflict
/// and at the conflict step.
inline std::optional<SubgridSpec> find_enclosing_subgrid(const GridMap& map, const Plan& plan, const Conflict& c) {
  const std::size_t t = std::size_t(c.time);
  std::vector<VertexId> must;
  for (int r : {c.a, c.b}) {
    const Path& p = plan[std::size_t(r)];
    must.push_back(at(p, t - 1));
    must.push_back(at(p, t));
  }
  return find_enclosing_subgrid(map, must);
}

}  // namespace densemapf
