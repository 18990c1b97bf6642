#pragma once

#include <covdist/core.hpp>
#include <covdist/md/forces.hpp>
#include <covdist/md/system.hpp>

#include <cmath>
#include <random>
#include <string>

namespace covdist::md {

namespace detail {

inline void kick(SimState& s, double half_dt) {
  for (std::size_t i = 0; i < s.size(); ++i) s.velocities[i] += s.forces[i] * half_dt;
}

inline void drift(SimState& s, double h, double box) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 d = s.velocities[i] * h;
    s.unwrapped[i] += d;
    Vec3& p = s.positions[i];
    p += d;
    p.x = wrap(p.x, box);
    p.y = wrap(p.y, box);
    p.z = wrap(p.z, box);
  }
}

inline void finish_step(SimState& s) {
  s.kinetic_energy = kinetic_energy(s.velocities);
  ++s.step;
  if (!std::isfinite(s.kinetic_energy) || !std::isfinite(s.potential_energy)) {
    throw RuntimeError("integration blow-up at step " + std::to_string(s.step));
  }
  for (const auto& p : s.positions)
    if (!is_finite(p)) throw RuntimeError("integration blow-up at step " + std::to_string(s.step));
}

}  // namespace detail

/// Builds a state at the given positions and velocities with forces evaluated.
inline SimState make_state(std::vector<Vec3> positions, std::vector<Vec3> velocities, ForceField& field) {
  if (positions.size() != velocities.size()) throw ValidationError("positions/velocities size mismatch");
  SimState s;
  for (auto& p : positions) p = {wrap(p.x, field.box()), wrap(p.y, field.box()), wrap(p.z, field.box())};
  s.unwrapped = positions;
  s.positions = std::move(positions);
  s.velocities = std::move(velocities);
  compute_forces(s, field);
  s.kinetic_energy = kinetic_energy(s.velocities);
  return s;
}

/// Kick-drift-kick. Expects forces current for the positions.
inline void velocity_verlet_step(SimState& s, double dt, ForceField& field) {
  detail::kick(s, 0.5 * dt);
  detail::drift(s, dt, field.box());
  compute_forces(s, field);
  detail::kick(s, 0.5 * dt);
  detail::finish_step(s);
}

/// BAOAB Langevin splitting at temperature T with friction gamma (unit mass).
class LangevinIntegrator {
 public:
  LangevinIntegrator(double temperature, double gamma, double dt, std::uint64_t seed)
      : dt_(dt), rng_(seed) {
    if (!(gamma > 0.0)) throw ValidationError("langevin: gamma must be positive");
    if (!(temperature > 0.0)) throw ValidationError("langevin: temperature must be positive");
    c1_ = std::exp(-gamma * dt);
    c2_ = std::sqrt(-std::expm1(-2.0 * gamma * dt) * temperature);
  }

  /// Standard deviation of the velocity noise added per step.
  double noise_amplitude() const { return c2_; }

  void step(SimState& s, ForceField& field) {
    detail::kick(s, 0.5 * dt_);                 // B
    detail::drift(s, 0.5 * dt_, field.box());   // A
    for (auto& v : s.velocities) {              // O
      v = v * c1_ + Vec3{gauss_(rng_), gauss_(rng_), gauss_(rng_)} * c2_;
    }
    detail::drift(s, 0.5 * dt_, field.box());   // A
    compute_forces(s, field);
    detail::kick(s, 0.5 * dt_);                 // B
    detail::finish_step(s);
  }

 private:
  double dt_;
  double c1_{1.0};
  double c2_{0.0};
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

inline void langevin_step(SimState& s, LangevinIntegrator& integrator, ForceField& field) {
  integrator.step(s, field);
}

}  // namespace covdist::md
