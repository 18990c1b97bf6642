#pragma once

// Pairwise LJ forces under minimum-image periodic boundaries. Two paths:
// an O(n^2) all-pairs loop (the reference) and a linked-cell loop rebuilt on
// every call.

#include <covdist/core.hpp>
#include <covdist/md/potential.hpp>
#include <covdist/md/system.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace covdist::md {

enum class ForceMethod { automatic, all_pairs, cell_list, none };

inline constexpr double kOverlapDistance = 1e-6;

class ForceField {
 public:
  ForceField(double box, double cutoff, ForceMethod method = ForceMethod::automatic)
      : box_(box), cutoff_(cutoff), kernel_(cutoff), method_(method) {
    if (!(box > 0.0)) throw ValidationError("force field: box must be positive");
    if (!(cutoff > 0.0)) throw ValidationError("force field: cutoff must be positive");
    if (std::isfinite(cutoff) && cutoff > 0.5 * box) {
      throw ValidationError("force field: cutoff exceeds half the box");
    }
    cells_per_side_ = std::isfinite(cutoff) && method != ForceMethod::none
                          ? static_cast<int>(std::min(64.0, std::floor(box / cutoff)))
                          : 1;
    if (method_ == ForceMethod::cell_list && cells_per_side_ < 3) {
      throw ValidationError("force field: cell list needs box >= 3 * cutoff");
    }
  }

  explicit ForceField(const SimConfig& c, ForceMethod method = ForceMethod::automatic)
      : ForceField(c.box_length, c.cutoff_radius, method) {}

  double box() const { return box_; }
  double cutoff() const { return cutoff_; }

  bool uses_cell_list() const {
    return method_ == ForceMethod::cell_list ||
           (method_ == ForceMethod::automatic && cells_per_side_ >= 3);
  }

  /// Fills forces and returns the total potential energy.
  double compute(std::span<const Vec3> pos, std::span<Vec3> forces) {
    for (auto& f : forces) f = {};
    if (method_ == ForceMethod::none) return 0.0;
    return uses_cell_list() ? cell_loop(pos, forces) : all_pairs(pos, forces);
  }

  double all_pairs(std::span<const Vec3> pos, std::span<Vec3> forces) const {
    double energy = 0.0;
    const std::size_t n = pos.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) energy += interact(pos, forces, i, j);
    return energy;
  }

 private:
  Vec3 minimum_image(Vec3 d) const {
    const double inv = 1.0 / box_;
    d.x -= box_ * std::nearbyint(d.x * inv);
    d.y -= box_ * std::nearbyint(d.y * inv);
    d.z -= box_ * std::nearbyint(d.z * inv);
    return d;
  }

  double interact(std::span<const Vec3> pos, std::span<Vec3> forces, std::size_t i,
                  std::size_t j) const {
    const Vec3 d = minimum_image(pos[i] - pos[j]);
    const double r2 = norm2(d);
    if (r2 >= kernel_.cutoff_sq) return 0.0;
    if (r2 < kOverlapDistance * kOverlapDistance) {
      throw RuntimeError("pair overlap between particles " + std::to_string(i) + " and " +
                         std::to_string(j));
    }
    double f_over_r = 0.0;
    const double u = kernel_(r2, f_over_r);
    const Vec3 f = d * f_over_r;
    forces[i] += f;
    forces[j] -= f;
    return u;
  }

  int cell_of(const Vec3& p) const {
    const int m = cells_per_side_;
    auto idx = [&](double x) {
      int c = static_cast<int>(x / box_ * m);
      return c < 0 ? 0 : (c >= m ? m - 1 : c);
    };
    return (idx(p.x) * m + idx(p.y)) * m + idx(p.z);
  }

  double cell_loop(std::span<const Vec3> pos, std::span<Vec3> forces) {
    const int m = cells_per_side_;
    const std::size_t n = pos.size();
    head_.assign(static_cast<std::size_t>(m) * m * m, -1);
    next_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = cell_of(pos[i]);
      next_[i] = head_[c];
      head_[c] = static_cast<int>(i);
    }
    // 13 forward neighbours plus the cell itself visit each cell pair once
    static constexpr int offsets[13][3] = {{1, 0, 0},  {1, 1, 0},  {0, 1, 0},   {-1, 1, 0}, {0, 0, 1},
                                           {1, 0, 1},  {-1, 0, 1}, {0, 1, 1},   {0, -1, 1}, {1, 1, 1},
                                           {-1, 1, 1}, {1, -1, 1}, {-1, -1, 1}};
    double energy = 0.0;
    for (int cx = 0; cx < m; ++cx)
      for (int cy = 0; cy < m; ++cy)
        for (int cz = 0; cz < m; ++cz) {
          const int c = (cx * m + cy) * m + cz;
          for (int i = head_[c]; i >= 0; i = next_[i])
            for (int j = next_[i]; j >= 0; j = next_[j]) energy += interact(pos, forces, i, j);
          for (const auto& o : offsets) {
            const int nx = (cx + o[0] + m) % m, ny = (cy + o[1] + m) % m, nz = (cz + o[2] + m) % m;
            const int nc = (nx * m + ny) * m + nz;
            for (int i = head_[c]; i >= 0; i = next_[i])
              for (int j = head_[nc]; j >= 0; j = next_[j]) energy += interact(pos, forces, i, j);
          }
        }
    return energy;
  }

  double box_;
  double cutoff_;
  LjKernel kernel_;
  ForceMethod method_;
  int cells_per_side_{1};
  std::vector<int> head_;
  std::vector<int> next_;
};

/// Refreshes state.forces and state.potential_energy.
inline void compute_forces(SimState& state, ForceField& field) {
  state.forces.resize(state.positions.size());
  state.potential_energy = field.compute(state.positions, state.forces);
}

inline void compute_forces(SimState& state, const SimConfig& config) {
  ForceField field(config);
  compute_forces(state, field);
}

/// Total shifted-truncated potential (no forces), all pairs.
inline double total_potential(std::span<const Vec3> pos, double box, double cutoff) {
  ForceField field(box, cutoff, ForceMethod::all_pairs);
  std::vector<Vec3> scratch(pos.size());
  return field.all_pairs(pos, scratch);
}

}  // namespace covdist::md
