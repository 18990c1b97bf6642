#pragma once

// Equilibrate under a Langevin thermostat, then run NVE production and hand
// sampled frames to an observer.

#include <covdist/core.hpp>
#include <covdist/md/forces.hpp>
#include <covdist/md/integrators.hpp>
#include <covdist/md/system.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace covdist::md {

struct EnergyRecord {
  std::uint64_t step{0};  // production step index
  double kinetic{0.0};
  double potential{0.0};
  double total{0.0};
  double temperature{0.0};
};

/// Callbacks receive frame indices counted from the start of production.
/// Velocity frame k is the state at production step k * sample_stride;
/// position frame k at step k * position_stride (unwrapped coordinates).
struct SimulationObserver {
  std::function<void(std::size_t, std::span<const Vec3>)> on_velocity_frame;
  std::function<void(std::size_t, std::span<const Vec3>)> on_position_frame;
  std::function<void(const EnergyRecord&)> on_energy;
};

struct SimulationSummary {
  double mean_temperature{0.0};       // over production energy records
  double energy_drift{0.0};           // relative, see relative_energy_drift
  double initial_total_energy{0.0};
  double final_total_energy{0.0};
  Vec3 momentum_change{};             // production end minus start
  std::size_t velocity_frames{0};
  std::size_t position_frames{0};
};

/// |<E>_last - <E>_first| / |<E>_first| with each mean over a tenth of the
/// records (at least one), which filters the bounded Verlet oscillation.
inline double relative_energy_drift(std::span<const double> totals) {
  if (totals.size() < 2) return 0.0;
  const std::size_t w = std::max<std::size_t>(1, totals.size() / 10);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    head += totals[i];
    tail += totals[totals.size() - w + i];
  }
  head /= static_cast<double>(w);
  tail /= static_cast<double>(w);
  return std::abs(tail - head) / std::abs(head);
}

inline std::size_t frames_for(std::size_t steps, std::size_t stride) { return (steps + stride - 1) / stride; }

/// FCC start, Maxwell-Boltzmann velocities, Langevin (BAOAB) equilibration at
/// the target temperature, then NVE velocity Verlet. At the hand-over the net
/// momentum is removed and velocities rescaled so the total energy equals the
/// mean potential energy of the second half of equilibration plus the
/// kinetic energy at the target temperature.
inline SimulationSummary run_simulation(const SimConfig& config, const SimulationObserver& observer = {},
                                        ForceMethod method = ForceMethod::automatic) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  ForceField field(config, method);
  const std::size_t cells = fcc_cells_for(config.n_particles);
  SimState state = make_state(fcc_init(cells, config.box_length),
                              maxwell_boltzmann(config.n_particles, config.temperature, rng), field);

  LangevinIntegrator thermostat(config.temperature, config.langevin_gamma, config.dt, rng());
  double u_sum = 0.0;
  std::size_t u_count = 0;
  for (std::size_t s = 0; s < config.n_steps_equil; ++s) {
    thermostat.step(state, field);
    if (2 * s >= config.n_steps_equil) {
      u_sum += state.potential_energy;
      ++u_count;
    }
  }

  remove_net_momentum(state.velocities);
  rescale_to_temperature(state.velocities, config.temperature);
  const double k_target = kinetic_energy(state.velocities);
  if (u_count > 0) {
    // total energy set to the canonical mean so NVE averages sit at the target
    const double k = k_target + u_sum / static_cast<double>(u_count) - state.potential_energy;
    if (k > 0.5 * k_target && k < 1.5 * k_target) {
      const double scale = std::sqrt(k / k_target);
      for (auto& v : state.velocities) v *= scale;
    }
  }
  state.kinetic_energy = kinetic_energy(state.velocities);
  state.unwrapped = state.positions;
  state.step = 0;

  SimulationSummary summary;
  std::vector<double> totals;
  double temp_sum = 0.0;
  const Vec3 p0 = total_momentum(state.velocities);
  summary.initial_total_energy = state.total_energy();

  auto sample = [&](std::size_t step) {
    if (step % config.sample_stride == 0) {
      if (observer.on_velocity_frame) observer.on_velocity_frame(summary.velocity_frames, state.velocities);
      ++summary.velocity_frames;
      EnergyRecord rec{step, state.kinetic_energy, state.potential_energy, state.total_energy(),
                       kinetic_temperature(state.kinetic_energy, state.size())};
      totals.push_back(rec.total);
      temp_sum += rec.temperature;
      if (observer.on_energy) observer.on_energy(rec);
    }
    if (step % config.position_stride == 0) {
      if (observer.on_position_frame) observer.on_position_frame(summary.position_frames, state.unwrapped);
      ++summary.position_frames;
    }
  };

  for (std::size_t s = 0; s < config.n_steps_prod; ++s) {
    sample(s);
    velocity_verlet_step(state, config.dt, field);
  }

  summary.final_total_energy = state.total_energy();
  summary.momentum_change = total_momentum(state.velocities) - p0;
  summary.mean_temperature = totals.empty() ? 0.0 : temp_sum / static_cast<double>(totals.size());
  summary.energy_drift = relative_energy_drift(totals);
  return summary;
}

}  // namespace covdist::md
