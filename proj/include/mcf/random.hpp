#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mcf {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based sub-stream seed: folds each path element into the master seed
/// so that e.g. (seed, tree 17) is reproducible without touching other trees.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

/// Uniform integer in [0, bound). Bitmask rejection so results do not depend on
/// the standard library's distribution implementation.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

/// Uniform real in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Standard normal via Box-Muller (both variates consumed per call pair are not
/// cached; one draw per call).
double standard_normal(Rng& rng);

/// First k elements of a partial Fisher-Yates shuffle of `items`.
template <class T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  if (k > items.size()) k = items.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

}  // namespace mcf
