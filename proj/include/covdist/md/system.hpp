#pragma once

#include <covdist/core.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace covdist::md {

struct SimConfig {
  std::size_t n_particles{500};
  double box_length{8.549879733383484};  // (500 / 0.8)^(1/3)
  double temperature{1.0};
  double dt{0.005};
  std::size_t n_steps_equil{10000};
  std::size_t n_steps_prod{20000};
  double cutoff_radius{2.5};
  double langevin_gamma{1.0};
  std::uint64_t seed{1};
  std::size_t sample_stride{1};    // velocity frames and energy records
  std::size_t position_stride{10};  // unwrapped position frames

  double density() const {
    return static_cast<double>(n_particles) / (box_length * box_length * box_length);
  }
};

inline double box_for_density(std::size_t n_particles, double density) {
  return std::cbrt(static_cast<double>(n_particles) / density);
}

/// FCC unit cells per side for n = 4 c^3, or 0 if n is not of that form.
inline std::size_t fcc_cells_for(std::size_t n) {
  const auto c = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n) / 4.0)));
  return 4 * c * c * c == n ? c : 0;
}

/// Throws ValidationError naming the offending field.
inline void validate(const SimConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError("invalid config field '" + field + "': " + why);
  };
  if (c.n_particles < 2) fail("n_particles", "must be >= 2");
  if (fcc_cells_for(c.n_particles) == 0) fail("n_particles", "must equal 4*c^3 for an FCC start");
  if (!(c.box_length > 0.0) || !std::isfinite(c.box_length)) fail("box_length", "must be positive");
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) fail("temperature", "must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("dt", "must be positive");
  if (!(c.cutoff_radius > 0.0)) fail("cutoff_radius", "must be positive");
  if (c.cutoff_radius > 0.5 * c.box_length) fail("cutoff_radius", "must not exceed box_length/2");
  if (!(c.langevin_gamma > 0.0) || !std::isfinite(c.langevin_gamma)) fail("langevin_gamma", "must be positive");
  if (c.sample_stride < 1) fail("sample_stride", "must be >= 1");
  if (c.position_stride < 1) fail("position_stride", "must be >= 1");
  if (c.n_steps_prod < 1) fail("n_steps_prod", "must be >= 1");
}

struct SimState {
  std::vector<Vec3> positions;  // wrapped into [0, L)
  std::vector<Vec3> unwrapped;  // continuous, for displacement statistics
  std::vector<Vec3> velocities;
  std::vector<Vec3> forces;
  double potential_energy{0.0};
  double kinetic_energy{0.0};
  std::uint64_t step{0};

  std::size_t size() const { return positions.size(); }
  double total_energy() const { return potential_energy + kinetic_energy; }
};

inline double wrap(double x, double box) {
  x -= box * std::floor(x / box);
  return x >= box ? 0.0 : x;
}

inline double kinetic_energy(const std::vector<Vec3>& v) {
  double s = 0.0;
  for (const auto& u : v) s += norm2(u);
  return 0.5 * s;
}

/// 2K / (3n), unit mass.
inline double kinetic_temperature(double kinetic, std::size_t n) {
  return 2.0 * kinetic / (3.0 * static_cast<double>(n));
}

inline Vec3 total_momentum(const std::vector<Vec3>& v) {
  Vec3 p{};
  for (const auto& u : v) p += u;
  return p;
}

inline void remove_net_momentum(std::vector<Vec3>& v) {
  Vec3 mean = total_momentum(v) * (1.0 / static_cast<double>(v.size()));
  for (auto& u : v) u -= mean;
}

inline void rescale_to_temperature(std::vector<Vec3>& v, double target) {
  const double t = kinetic_temperature(kinetic_energy(v), v.size());
  if (!(t > 0.0)) return;
  const double s = std::sqrt(target / t);
  for (auto& u : v) u *= s;
}

/// 4 c^3 sites of a face-centred cubic lattice filling a cube of side box.
inline std::vector<Vec3> fcc_init(std::size_t cells, double box) {
  if (cells < 1) throw ValidationError("fcc_init: cells must be >= 1");
  static constexpr Vec3 basis[4] = {{0.0, 0.0, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}};
  const double a = box / static_cast<double>(cells);
  std::vector<Vec3> out;
  out.reserve(4 * cells * cells * cells);
  for (std::size_t i = 0; i < cells; ++i)
    for (std::size_t j = 0; j < cells; ++j)
      for (std::size_t k = 0; k < cells; ++k)
        for (const auto& b : basis) {
          out.push_back({a * (static_cast<double>(i) + b.x), a * (static_cast<double>(j) + b.y),
                         a * (static_cast<double>(k) + b.z)});
        }
  return out;
}

/// Maxwell-Boltzmann draw at temperature t, zero net momentum, rescaled so
/// the kinetic temperature equals t exactly.
template <class Rng>
std::vector<Vec3> maxwell_boltzmann(std::size_t n, double t, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(t));
  std::vector<Vec3> v(n);
  for (auto& u : v) u = {gauss(rng), gauss(rng), gauss(rng)};
  remove_net_momentum(v);
  rescale_to_temperature(v, t);
  return v;
}

}  // namespace covdist::md
