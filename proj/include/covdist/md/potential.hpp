#pragma once

// 12-6 Lennard-Jones pair interaction in reduced units (sigma = epsilon = 1),
// truncated at r_c and shifted so that U(r_c) = 0.

#include <covdist/core.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace covdist::md {

inline constexpr double kNoCutoff = std::numeric_limits<double>::infinity();

/// Unshifted 4 (r^-12 - r^-6).
inline double lj_potential(double r) {
  const double s6 = 1.0 / (r * r * r * r * r * r);
  return 4.0 * s6 * (s6 - 1.0);
}

/// -dU/dr of the unshifted form.
inline double lj_force(double r) {
  const double s6 = 1.0 / (r * r * r * r * r * r);
  return 24.0 * s6 * (2.0 * s6 - 1.0) / r;
}

struct PairInteraction {
  double potential{0.0};
  double force_magnitude{0.0};  // -dU/dr, positive = repulsive
};

inline PairInteraction lj_pair(double r, double cutoff = kNoCutoff) {
  if (!(r > 0.0)) throw ValidationError("lj_pair: separation must be positive, got " + std::to_string(r));
  if (r >= cutoff) return {};
  const double shift = std::isfinite(cutoff) ? lj_potential(cutoff) : 0.0;
  return {lj_potential(r) - shift, lj_force(r)};
}

/// Evaluates the pair kernel from a squared separation, as used in the force
/// loops. Returns the shifted energy and sets f_over_r = (-dU/dr) / r.
struct LjKernel {
  double cutoff_sq;
  double shift;

  explicit LjKernel(double cutoff)
      : cutoff_sq(cutoff * cutoff), shift(std::isfinite(cutoff) ? lj_potential(cutoff) : 0.0) {}

  double operator()(double r2, double& f_over_r) const {
    const double inv2 = 1.0 / r2;
    const double s6 = inv2 * inv2 * inv2;
    f_over_r = 24.0 * s6 * (2.0 * s6 - 1.0) * inv2;
    return 4.0 * s6 * (s6 - 1.0) - shift;
  }
};

}  // namespace covdist::md
