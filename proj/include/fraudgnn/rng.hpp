#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "fraudgnn/common.hpp"

namespace fraudgnn {

// Deterministic splitmix64 stream. We roll our own distributions instead of
// using <random> ones because libstdc++/libc++ produce different sequences;
// every artifact in the pipeline must be reproducible from (seed, stream tag)
// alone.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, bound) via rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    require(bound > 0, ErrorCategory::Numeric, "rng bound must be positive");
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the spare value is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_real();
    } while (u1 <= 0.0);
    u2 = next_real();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  bool next_bernoulli(double p) { return next_real() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Derives an independent stream from a root seed, a purpose tag and indices.
// Streams with distinct (tag, a, b) never collide in practice.
inline RngStream derive_stream(std::uint64_t seed, std::string_view tag,
                               std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = fnv1a64(tag, seed ^ 0x9e3779b97f4a7c15ull);
  h ^= a * 0xff51afd7ed558ccdull;
  h ^= (b + 0x2545f4914f6cdd1dull) * 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return RngStream(h);
}

}  // namespace fraudgnn
