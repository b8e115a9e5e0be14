#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "stein/common.hpp"

namespace stein {

/// Deterministic random stream with a fixed draw order.
///
/// The engine is std::mt19937_64 (bit-portable by the standard). All
/// distribution transforms are implemented here rather than through
/// std:: distributions, whose algorithms are implementation-defined:
///   - uniform():   one engine draw, 53-bit mantissa, range [0, 1)
///   - normal():    exactly two engine draws (Box-Muller, cosine branch)
/// so the same seed always consumes the engine in the same order and
/// produces identical values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform draw in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw; consumes exactly two engine values.
  double normal() {
    // u1 in (0, 1] so the logarithm is finite.
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Vector of i.i.d. standard normals, filled in index order.
  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = normal();
    return z;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace stein
