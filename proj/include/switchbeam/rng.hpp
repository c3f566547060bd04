#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace switchbeam {

/// Derives an independent stream seed from a master seed and an index
/// (splitmix64 finalizer). Used to give every trial / method / column its
/// own reproducible stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seedable random source backed by std::mt19937_64. The engine is fully
/// specified by the standard; the distributions below are hand-rolled so
/// that identical seeds give identical streams on every platform and
/// standard library (std::normal_distribution et al. are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p = 0.5) { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Zero-mean Laplacian with the given scale (inverse CDF). scale == 0
  /// degenerates to a point mass at zero.
  double laplace(double scale) {
    double v;
    do {
      v = uniform();
    } while (v == 0.0);  // excludes the -0.5 endpoint below
    const double u = v - 0.5;
    const double mag = -std::log1p(-2.0 * std::abs(u));
    return u < 0.0 ? -scale * mag : scale * mag;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace switchbeam
