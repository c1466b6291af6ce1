#pragma once

// Portable sampling helpers. std::mt19937_64 is fully specified by the
// standard; the <random> distributions are not, so the few we need are
// written out here to keep generated instances identical across toolchains.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "grid.hpp"

namespace densemapf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Standard normal deviate via Box-Muller (one value per call, the twin is discarded).
inline double standard_normal(Rng& rng) {
  double u1;
  do u1 = uniform01(rng);
  while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

/// k distinct elements of `pool` in random order (partial Fisher-Yates).
template <class T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_below(rng, pool.size() - i)]);
  pool.resize(k);
  return pool;
}

/// Random obstacles at the given ratio; retries until the free cells form one component.
inline GridMap random_obstacle_map(int width, int height, double obstacle_ratio, Rng& rng) {
  const int cells = width * height;
  const int obstacles = static_cast<int>(std::lround(obstacle_ratio * cells));
  std::vector<int> ids(static_cast<std::size_t>(cells));
  for (int k = 0; k < cells; ++k) ids[static_cast<std::size_t>(k)] = k;
  for (int attempt = 0;; ++attempt) {
    auto picked = sample_without_replacement(ids, static_cast<std::size_t>(obstacles), rng);
    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(cells), 0);
    for (int c : picked) blocked[static_cast<std::size_t>(c)] = 1;
    GridMap map(width, height, std::move(blocked),
                "random-" + std::to_string(width) + "x" + std::to_string(height));
    if (map.component_count() == 1 || attempt > 1000) return map;
  }
}

}  // namespace densemapf
