#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace episeq {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to spread user seeds and stream ids.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and up to three ids.
// Every per-episode random decision gets its own stream so results do not
// depend on scheduling or thread count.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Symmetric Dirichlet(1), i.e. uniform on the simplex.
inline std::vector<double> dirichlet1(int n, Rng& rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    // Exponential(1) via inversion; 1-u avoids log(0).
    w[i] = -std::log(1.0 - uniform01(rng));
    total += w[i];
  }
  for (int i = 0; i < n; ++i) w[i] /= total;
  return w;
}

}  // namespace episeq
