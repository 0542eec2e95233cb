#ifndef BUNDLEDIFF_RNG_HPP
#define BUNDLEDIFF_RNG_HPP

#include <cmath>
#include <cstdint>

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).  Increments
// are keyed by (seed, path, step, block) so any path/step draw can be produced
// independently of thread scheduling, which is what makes ensemble statistics
// bit-reproducible at every thread count.

namespace bundlediff {

namespace detail {
inline void philox_round(uint32_t c[4], const uint32_t k[2]) {
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  const uint64_t p0 = static_cast<uint64_t>(M0) * c[0];
  const uint64_t p1 = static_cast<uint64_t>(M1) * c[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  const uint32_t r0 = hi1 ^ c[1] ^ k[0];
  const uint32_t r1 = lo1;
  const uint32_t r2 = hi0 ^ c[3] ^ k[1];
  const uint32_t r3 = lo0;
  c[0] = r0; c[1] = r1; c[2] = r2; c[3] = r3;
}
}  // namespace detail

inline void philox4x32(uint32_t counter[4], uint32_t key0, uint32_t key1, uint32_t out[4]) {
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  uint32_t c[4] = {counter[0], counter[1], counter[2], counter[3]};
  uint32_t k[2] = {key0, key1};
  for (int r = 0; r < 10; ++r) {
    detail::philox_round(c, k);
    k[0] += W0;
    k[1] += W1;
  }
  out[0] = c[0]; out[1] = c[1]; out[2] = c[2]; out[3] = c[3];
}

// One Philox block -> two standard normals by Box-Muller.
inline void normal_pair(uint64_t seed, uint64_t path, uint32_t step, uint32_t block,
                        double& z0, double& z1) {
  uint32_t ctr[4] = {static_cast<uint32_t>(path), static_cast<uint32_t>(path >> 32), step, block};
  uint32_t out[4];
  philox4x32(ctr, static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), out);
  const double inv32 = 1.0 / 4294967296.0;
  // u1 in (0,1], u2 in [0,1)
  const double u1 = (static_cast<double>(out[0]) + 0.5) * inv32;
  const double u2 = (static_cast<double>(out[1]) + 0.5) * inv32;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 6.283185307179586476925286766559 * u2;
  z0 = r * std::cos(phi);
  z1 = r * std::sin(phi);
}

// Per-path stream of N(0,1) increments, deterministic in (seed, path, step).
struct NoiseStream {
  uint64_t seed = 0;
  uint64_t path = 0;

  // fill dW[0..n) with sqrt(dt)-scaled normals for a given step index
  void gaussians(uint32_t step, int n, double* z) const {
    int i = 0;
    uint32_t block = 0;
    while (i < n) {
      double a, b;
      normal_pair(seed, path, step, block++, a, b);
      z[i++] = a;
      if (i < n) z[i++] = b;
    }
  }
};

}  // namespace bundlediff

#endif
