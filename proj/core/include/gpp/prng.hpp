#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace gpp {

// Seeded splitmix64 stream. Every random draw in the toolkit (operator
// entries, masks, latent inits, weight inits) comes from one of these, so
// outputs are bit-reproducible for a given seed.
class Splitmix64 {
 public:
  explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // 53-bit uniform double strictly inside (0,1): (i + 0.5) / 2^53.
  double next_unit() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Standard normals from Box-Muller applied to consecutive pairs of
// next_unit() draws. The second value of each pair is cached, so a stream
// of k normals consumes exactly 2*ceil(k/2) uniforms.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = rng_.next_unit();
    const double u2 = rng_.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  Splitmix64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// First k slots of a Fisher-Yates shuffle of [0, n), in selection order.
inline std::vector<std::uint32_t> partial_shuffle_indices(Splitmix64& rng,
                                                          std::uint32_t n,
                                                          std::uint32_t k) {
  std::vector<std::uint32_t> pool(n);
  for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
  if (k > n) k = n;
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t j = i + static_cast<std::uint32_t>(rng.next() % (n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace gpp
