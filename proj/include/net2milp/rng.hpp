#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace net2milp {

/// Deterministic random stream. All randomness flows from one root seed;
/// child streams are derived by name so adding a consumer never perturbs
/// the draws of another. Uniform and gaussian transforms are pinned here
/// (not delegated to std distributions) so identical seeds give identical
/// values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Named child stream: hash of (seed, name) FNV-1a style.
  Rng child(std::string_view name) const {
    std::uint64_t h = 1469598103934665603ULL ^ root_;
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    Rng r(h);
    r.root_ = h;
    return r;
  }

  static Rng rooted(std::uint64_t seed) {
    Rng r(seed);
    r.root_ = seed;
    return r;
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; one value per call, cache of the pair.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling to kill modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = bits();
    while (x >= limit) x = bits();
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t root_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace net2milp
