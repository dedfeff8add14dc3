#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace krri {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream identifiers for deriving independent substreams from one user seed.
/// Streams are a pure function of (seed, tags...), never of execution order.
enum class StreamTag : std::uint64_t {
  Data = 1,
  CvFolds = 2,
  Truth = 3,
  Misc = 4,
};

/// Deterministic random source. The double-producing methods are defined in
/// terms of raw 64-bit engine output so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives a substream from a seed and a tag path.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = seed ^ 0xD1B54A32D192ED03ULL;
    for (std::uint64_t component : path) {
      std::uint64_t c = component;
      s ^= splitmix64(c);
      s = splitmix64(s);
    }
    return Rng(s);
  }

  static Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    return stream(seed, {static_cast<std::uint64_t>(tag), index});
  }

  std::uint64_t raw() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes engine output in fixed order.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((raw() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// Uniform integer in [0, n) by rejection; unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = raw();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace krri
