#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace affgan {

/// Deterministic random source. All distribution transforms are implemented
/// explicitly (std:: distributions are implementation-defined), so the same
/// seed yields the same stream on every platform. mt19937_64 itself is
/// fully specified by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix(seed)) {}

  /// Derives an independent stream for a named purpose, e.g. per-epoch
  /// shuffle/noise streams. Keying by (seed, purpose, index) makes resume
  /// from an epoch boundary bit-identical to an uninterrupted run.
  static Rng stream(uint64_t seed, std::string_view purpose, uint64_t index = 0) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : purpose) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ull;
    }
    h ^= splitmix(seed);
    h = splitmix(h ^ (0x9e3779b97f4a7c15ull * (index + 1)));
    return Rng(h);
  }

  uint64_t next_u64() { return eng_(); }

  /// Unbiased integer in [0, n) via rejection sampling.
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform double in [0, 1) with 53 bits of entropy.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (spare value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  float normalf(float mean, float stddev) {
    return mean + stddev * static_cast<float>(normal());
  }

  /// Fisher-Yates with explicit bounded draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// +1 or -1 with equal probability.
  float sign() { return (eng_() & 1ull) ? 1.0f : -1.0f; }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace affgan
