#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace moedti {

using Rng = std::mt19937_64;

// FNV-1a. Used to derive per-stream seeds and config fingerprints.
inline uint64_t hash64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Deterministic per-purpose seed so independent sampling streams never
// share state.
inline uint64_t derive_seed(uint64_t base, std::string_view stream) {
  uint64_t h = hash64(stream);
  h ^= base + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

// Uniform helpers with a fixed algorithm so sequences are reproducible
// regardless of the standard library's distribution internals.
inline double uniform_real(Rng& rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + u * (hi - lo);
}

// Uniform integer in [0, n). n must be positive.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace moedti
