#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rcore {

// Deterministic generator with named substreams. Streams derived from the
// same run seed but different names (or indices) are statistically
// independent, so toggling a feature that consumes one stream leaves every
// other stream's draws untouched. Output is identical across platforms and
// compilers; std:: distributions are deliberately avoided because their
// sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  // Substream for (seed, name, index). Used as e.g.
  // Rng(seed).substream("vocamix.lambda") or per-clip counters.
  Rng substream(std::string_view name, std::uint64_t index = 0) const {
    std::uint64_t h = fnv1a(name);
    return Rng(mix(state_ ^ mix(h) ^ mix(index * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_index: n must be positive");
    // Rejection sampling to avoid the modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller; second variate discarded for stream simplicity.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Beta(a, b) for positive integer shape parameters via sums of exponentials.
  double beta_int(int a, int b) {
    if (a < 1 || b < 1) throw std::invalid_argument("Rng::beta_int: shapes must be >= 1");
    double x = gamma_int(a);
    double y = gamma_int(b);
    double s = x + y;
    return s > 0.0 ? x / s : 0.5;
  }

  // Fisher-Yates permutation of {0..n-1}.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  double gamma_int(int shape) {
    double acc = 0.0;
    for (int i = 0; i < shape; ++i) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      acc -= std::log(u);
    }
    return acc;
  }

  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t state_;
};

}  // namespace rcore
