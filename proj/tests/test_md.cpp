#include "support.hpp"

#include <covdist/md/diffusion.hpp>
#include <covdist/md/forces.hpp>
#include <covdist/md/integrators.hpp>
#include <covdist/md/potential.hpp>
#include <covdist/md/simulation.hpp>
#include <covdist/md/system.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace covdist;
using namespace covdist::md;
using Catch::Matchers::ContainsSubstring;

namespace {

const double kMinimum = std::pow(2.0, 1.0 / 6.0);

std::vector<Vec3> jittered_fcc(std::size_t cells, double box, double amp, std::uint64_t seed) {
  auto pos = fcc_init(cells, box);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  for (auto& p : pos) p = {wrap(p.x + u(rng), box), wrap(p.y + u(rng), box), wrap(p.z + u(rng), box)};
  return pos;
}

/// Ideal-gas state: no interactions, MB velocities at t.
SimState free_particles(std::size_t n, double box, double t, std::uint64_t seed, ForceField& field) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, box);
  std::vector<Vec3> pos(n);
  for (auto& p : pos) p = {u(rng), u(rng), u(rng)};
  return make_state(pos, maxwell_boltzmann(n, t, rng), field);
}

}  // namespace

// ---------------------------------------------------------------------------
// potential
// ---------------------------------------------------------------------------

TEST_CASE("LJ pair values", "[md][potential]") {
  CHECK(lj_pair(1.0).potential == 0.0);
  auto m = lj_pair(kMinimum);
  CHECK(m.potential == Catch::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(m.force_magnitude) < 1e-12);
  CHECK(lj_pair(2.5, 2.5).potential == 0.0);
  CHECK(lj_pair(2.5, 2.5).force_magnitude == 0.0);
  CHECK(lj_pair(3.0, 2.5).potential == 0.0);
  // shift cancels just inside the cutoff
  CHECK(std::abs(lj_pair(2.5 - 1e-9, 2.5).potential) < 1e-9);
  CHECK(lj_pair(1.5, 2.5).potential == Catch::Approx(lj_potential(1.5) - lj_potential(2.5)));
  CHECK(lj_pair(1.5, 2.5).force_magnitude == lj_force(1.5));
  CHECK_THROWS_AS(lj_pair(0.0), ValidationError);
  CHECK_THROWS_AS(lj_pair(-1.0), ValidationError);
}

TEST_CASE("LJ force is the negative derivative", "[md][potential]") {
  for (double r = 0.9; r < 2.5; r += 0.05) {
    const double h = 1e-5;
    const double fd = -(lj_potential(r + h) - lj_potential(r - h)) / (2 * h);
    CHECK(std::abs(fd - lj_force(r)) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

// ---------------------------------------------------------------------------
// lattice
// ---------------------------------------------------------------------------

TEST_CASE("FCC lattice", "[md][lattice]") {
  auto big = fcc_init(10, 17.1);
  CHECK(big.size() == 4000);
  CHECK(4000.0 / std::pow(17.1, 3) == Catch::Approx(0.80).margin(0.005));

  auto unit = fcc_init(1, 1.0);
  REQUIRE(unit.size() == 4);
  CHECK(unit[0] == Vec3{0, 0, 0});
  CHECK(unit[1] == Vec3{0, 0.5, 0.5});
  CHECK(unit[2] == Vec3{0.5, 0, 0.5});
  CHECK(unit[3] == Vec3{0.5, 0.5, 0});

  auto desk = fcc_init(5, 8.55);
  REQUIRE(desk.size() == 500);
  double dmin = 1e300;
  for (std::size_t i = 0; i < desk.size(); ++i)
    for (std::size_t j = i + 1; j < desk.size(); ++j) {
      Vec3 d = desk[i] - desk[j];
      for (int c = 0; c < 3; ++c) d[c] -= 8.55 * std::nearbyint(d[c] / 8.55);
      dmin = std::min(dmin, std::sqrt(norm2(d)));
    }
  CHECK(dmin >= 0.855 * std::sqrt(2.0) / 2.0 - 1e-12);
  for (const auto& p : desk)
    for (int c = 0; c < 3; ++c) CHECK((p[c] >= 0.0 && p[c] < 8.55));
}

TEST_CASE("desk defaults sit at density 0.8", "[md][lattice]") {
  SimConfig c;
  CHECK(c.box_length == Catch::Approx(box_for_density(500, 0.8)).epsilon(1e-15));
  CHECK(c.box_length == Catch::Approx(8.55).margin(0.001));
  CHECK(c.density() == Catch::Approx(0.8));
  CHECK(fcc_cells_for(500) == 5);
  CHECK(fcc_cells_for(4000) == 10);
  CHECK(fcc_cells_for(501) == 0);
}

TEST_CASE("config validation names the field", "[md]") {
  SimConfig c;
  c.dt = 0.0;
  CHECK_THROWS_WITH(validate(c), ContainsSubstring("'dt'"));
  c = SimConfig{};
  c.cutoff_radius = 5.0;
  CHECK_THROWS_WITH(validate(c), ContainsSubstring("'cutoff_radius'"));
  c = SimConfig{};
  c.n_particles = 499;
  CHECK_THROWS_WITH(validate(c), ContainsSubstring("'n_particles'"));
  CHECK_NOTHROW(validate(SimConfig{}));
}

// ---------------------------------------------------------------------------
// forces
// ---------------------------------------------------------------------------

TEST_CASE("pair at the potential minimum feels no force", "[md][forces]") {
  ForceField field(20.0, kNoCutoff);
  std::vector<Vec3> pos{{5, 5, 5}, {5 + kMinimum, 5, 5}}, f(2);
  field.compute(pos, f);
  CHECK(norm2(f[0]) < 1e-24);
  CHECK(norm2(f[1]) < 1e-24);
}

TEST_CASE("pair force matches finite differences", "[md][forces]") {
  ForceField field(10.0, 2.5);
  std::vector<Vec3> pos{{2, 3, 3}, {3.5, 3, 3}}, f(2);
  field.compute(pos, f);
  CHECK(f[0].x == -f[1].x);
  CHECK(f[0].y == 0.0);
  CHECK(f[0].z == 0.0);
  const double h = 1e-5;
  const double fd = -(lj_pair(1.5 + h, 2.5).potential - lj_pair(1.5 - h, 2.5).potential) / (2 * h);
  CHECK(std::abs(f[1].x - fd) < 1e-6);
}

TEST_CASE("overlapping particles are rejected", "[md][forces]") {
  ForceField field(10.0, 2.5);
  std::vector<Vec3> pos{{1, 1, 1}, {1, 1, 1 + 1e-8}}, f(2);
  CHECK_THROWS_WITH(field.compute(pos, f), ContainsSubstring("pair overlap"));
}

TEST_CASE("forces match finite differences of the total potential", "[md][forces][property]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double box = 6.0;
    auto pos = jittered_fcc(2, box, 0.25, rng());
    ForceField field(box, 2.5, ForceMethod::all_pairs);
    std::vector<Vec3> f(pos.size());
    field.compute(pos, f);
    const double h = 1e-5;
    for (std::size_t i = 0; i < pos.size(); i += 5)
      for (int c = 0; c < 3; ++c) {
        auto plus = pos, minus = pos;
        plus[i][c] += h;
        minus[i][c] -= h;
        const double fd = -(total_potential(plus, box, 2.5) - total_potential(minus, box, 2.5)) / (2 * h);
        CHECK(std::abs(fd - f[i][c]) < 1e-6 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
  }
  CHECK(checked > 0);
}

TEST_CASE("cell list equals all pairs", "[md][forces][property]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double box = box_for_density(500, 0.8);
    auto pos = seed == 1 ? fcc_init(5, box) : jittered_fcc(5, box, 0.2, seed);
    ForceField cells(box, 2.5, ForceMethod::cell_list), pairs(box, 2.5, ForceMethod::all_pairs);
    REQUIRE(cells.uses_cell_list());
    std::vector<Vec3> fc(pos.size()), fp(pos.size());
    const double ec = cells.compute(pos, fc);
    const double ep = pairs.compute(pos, fp);
    CHECK(std::abs(ec - ep) < 1e-10 * std::abs(ep));
    Vec3 net{};
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (int c = 0; c < 3; ++c) CHECK(std::abs(fc[i][c] - fp[i][c]) < 1e-10);
      net += fc[i];
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(net[c]) < 1e-9);
  }
  // larger box, more cells
  const double box = box_for_density(4000, 0.8);
  auto pos = jittered_fcc(10, box, 0.2, 99);
  ForceField cells(box, 2.5, ForceMethod::cell_list), pairs(box, 2.5, ForceMethod::all_pairs);
  std::vector<Vec3> fc(pos.size()), fp(pos.size());
  cells.compute(pos, fc);
  pairs.compute(pos, fp);
  double worst = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(fc[i][c] - fp[i][c]));
  CHECK(worst < 1e-10);
}

TEST_CASE("cell list needs three cells", "[md][forces]") {
  CHECK_THROWS_AS(ForceField(6.0, 2.5, ForceMethod::cell_list), ValidationError);
  CHECK_FALSE(ForceField(6.0, 2.5).uses_cell_list());
  CHECK(ForceField(8.55, 2.5).uses_cell_list());
}

// ---------------------------------------------------------------------------
// integrators
// ---------------------------------------------------------------------------

TEST_CASE("free flight", "[md][integrator]") {
  ForceField field(10.0, 2.5, ForceMethod::none);
  auto s = make_state({{1, 1, 1}}, {{1, 0, 0}}, field);
  velocity_verlet_step(s, 0.005, field);
  CHECK(s.positions[0].x == Catch::Approx(1.005).epsilon(1e-15));
  CHECK(s.unwrapped[0].x == Catch::Approx(1.005).epsilon(1e-15));
  CHECK(s.positions[0].y == 1.0);
  CHECK(s.step == 1);
}

TEST_CASE("positions wrap while unwrapped coordinates accumulate", "[md][integrator]") {
  ForceField field(2.0, kNoCutoff, ForceMethod::none);
  auto s = make_state({{1.99, 1, 1}}, {{1, 0, 0}}, field);
  for (int i = 0; i < 10; ++i) velocity_verlet_step(s, 0.005, field);
  CHECK(s.positions[0].x == Catch::Approx(0.04).margin(1e-12));
  CHECK(s.unwrapped[0].x == Catch::Approx(2.04).margin(1e-12));
}

TEST_CASE("bound pair conserves energy", "[md][integrator]") {
  ForceField field(20.0, kNoCutoff);
  auto s = make_state({{9, 10, 10}, {10.2, 10, 10}}, {{0.1, 0.05, 0}, {-0.1, -0.05, 0}}, field);
  const double e0 = s.total_energy();
  REQUIRE(e0 < 0.0);
  std::vector<double> totals{e0};
  for (int i = 0; i < 10000; ++i) {
    velocity_verlet_step(s, 0.005, field);
    totals.push_back(s.total_energy());
  }
  CHECK(relative_energy_drift(totals) < 1e-5);
  CHECK(std::abs(s.total_energy() - e0) / std::abs(e0) < 1e-4);
}

TEST_CASE("velocity Verlet is time reversible", "[md][integrator]") {
  const double box = box_for_density(108, 0.8);
  ForceField field(box, 2.5);
  std::mt19937_64 rng(3);
  auto s = make_state(jittered_fcc(3, box, 0.05, 4), maxwell_boltzmann(108, 1.0, rng), field);
  const auto start = s.unwrapped;
  for (int i = 0; i < 50; ++i) velocity_verlet_step(s, 0.005, field);
  for (auto& v : s.velocities) v = v * -1.0;
  for (int i = 0; i < 50; ++i) velocity_verlet_step(s, 0.005, field);
  double worst = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i)
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(s.unwrapped[i][c] - start[i][c]));
  CHECK(worst < 1e-12);
}

TEST_CASE("integration blow-up is reported", "[md][integrator]") {
  ForceField field(10.0, kNoCutoff, ForceMethod::none);
  auto s = make_state({{1, 1, 1}}, {{1e308, 1e308, 0}}, field);
  CHECK_THROWS_WITH(velocity_verlet_step(s, 0.005, field), ContainsSubstring("integration blow-up"));
}

TEST_CASE("Langevin with vanishing friction reduces to velocity Verlet", "[md][integrator]") {
  const double box = box_for_density(108, 0.8);
  ForceField field(box, 2.5);
  std::mt19937_64 rng(5);
  auto a = make_state(jittered_fcc(3, box, 0.05, 6), maxwell_boltzmann(108, 1.0, rng), field);
  auto b = a;
  LangevinIntegrator lang(1.0, 1e-12, 0.005, 7);
  velocity_verlet_step(a, 0.005, field);
  langevin_step(b, lang, field);
  // noise per step has standard deviation c2 ~ sqrt(2 gamma dt T) ~ 1e-7
  const double vbound = 6.0 * lang.noise_amplitude() + 1e-12;
  double dpos = 0.0, dvel = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      dpos = std::max(dpos, std::abs(a.unwrapped[i][c] - b.unwrapped[i][c]));
      dvel = std::max(dvel, std::abs(a.velocities[i][c] - b.velocities[i][c]));
    }
  CHECK(dpos < 1e-8);
  CHECK(dvel < vbound);
}

TEST_CASE("Langevin is deterministic for a seed", "[md][integrator]") {
  ForceField field(10.0, kNoCutoff, ForceMethod::none);
  auto a = free_particles(50, 10.0, 1.0, 1, field), b = a;
  LangevinIntegrator la(1.0, 1.0, 0.005, 9), lb(1.0, 1.0, 0.005, 9);
  for (int i = 0; i < 100; ++i) {
    la.step(a, field);
    lb.step(b, field);
  }
  CHECK(a.velocities == b.velocities);
  CHECK(a.positions == b.positions);
}

TEST_CASE("Langevin ideal gas equipartition", "[md][integrator]") {
  ForceField field(10.0, kNoCutoff, ForceMethod::none);
  auto s = free_particles(500, 10.0, 1.0, 2, field);
  LangevinIntegrator lang(1.0, 1.0, 0.005, 3);
  double sum = 0.0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) {
    lang.step(s, field);
    sum += kinetic_temperature(s.kinetic_energy, s.size());
  }
  CHECK(std::abs(sum / steps - 1.0) < 0.02);
}

TEST_CASE("Langevin free-particle diffusion", "[md][diffusion]") {
  const double t = 1.0, gamma = 1.0;
  ForceField field(10.0, kNoCutoff, ForceMethod::none);
  auto s = free_particles(500, 10.0, t, 4, field);
  LangevinIntegrator lang(t, gamma, 0.005, 5);
  FrameTrajectory pos{Channel::position, 0.005, 10, 500, {}}, vel{Channel::velocity, 0.005, 2, 500, {}};
  for (int i = 0; i < 20000; ++i) {
    if (i % 10 == 0) pos.append_frame(s.unwrapped);
    if (i % 2 == 0) vel.append_frame(s.velocities);
    lang.step(s, field);
  }
  auto msd = diffusion_msd(pos);
  CHECK(msd.diffusive);
  CHECK(std::abs(msd.diffusion - t / gamma) < 0.1 * t / gamma);

  auto vacf = diffusion_vacf(vel, {10.0, 10, 0.01});
  CHECK_FALSE(vacf.divergent);
  CHECK(std::abs(vacf.diffusion - t / gamma) < 0.1 * t / gamma);
  // C(t) ~ 3 T exp(-gamma t)
  const auto k = static_cast<std::size_t>(1.0 / vacf.lag_spacing);
  CHECK(vacf.vacf[k] / vacf.vacf[0] == Catch::Approx(std::exp(-gamma * 1.0)).margin(0.03));
}

// ---------------------------------------------------------------------------
// diffusion estimators
// ---------------------------------------------------------------------------

TEST_CASE("stationary particles do not diffuse", "[md][diffusion]") {
  FrameTrajectory pos{Channel::position, 0.005, 1, 3, {}};
  for (int f = 0; f < 100; ++f) pos.append_frame(std::vector<Vec3>{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK(diffusion_msd(pos).diffusion == 0.0);
}

TEST_CASE("ballistic motion is flagged non-diffusive", "[md][diffusion]") {
  FrameTrajectory pos{Channel::position, 0.01, 1, 2, {}};
  for (int f = 0; f < 400; ++f) {
    const double t = f * 0.01;
    pos.append_frame(std::vector<Vec3>{{t, 0, 0}, {0, -2 * t, 0}});
  }
  auto r = diffusion_msd(pos);
  CHECK_FALSE(r.diffusive);
  CHECK(r.loglog_exponent == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("diffusion estimators need frames", "[md][diffusion]") {
  FrameTrajectory one{Channel::position, 0.01, 1, 1, {{0, 0, 0}}};
  CHECK_THROWS_AS(diffusion_msd(one), ValidationError);
  CHECK_THROWS_AS(diffusion_vacf(one), ValidationError);
}

TEST_CASE("constant velocities give a divergent VACF", "[md][diffusion]") {
  FrameTrajectory vel{Channel::velocity, 0.01, 1, 2, {}};
  for (int f = 0; f < 100; ++f) vel.append_frame(std::vector<Vec3>{{1, 0, 0}, {0, 2, 0}});
  auto r = diffusion_vacf(vel);
  CHECK(r.divergent);
  for (double c : r.vacf) CHECK(c == Catch::Approx(2.5));
}

TEST_CASE("VACF at zero lag is the kinetic temperature", "[md][diffusion]") {
  std::mt19937_64 rng(12);
  FrameTrajectory vel{Channel::velocity, 0.01, 1, 200, {}};
  double tsum = 0.0;
  for (int f = 0; f < 50; ++f) {
    auto v = maxwell_boltzmann(200, 0.9, rng);
    for (auto& u : v) u *= 1.0 + 0.01 * f;
    tsum += kinetic_temperature(kinetic_energy(v), 200);
    vel.append_frame(v);
  }
  auto r = diffusion_vacf(vel, {0.0, 1, 0.01});
  CHECK(r.temperature == Catch::Approx(tsum / 50).epsilon(1e-12));
}

TEST_CASE("VACF integration cut", "[md][diffusion]") {
  // exp(-t) sampled at 0.01 with a tail that crosses zero then settles
  std::vector<double> c;
  for (int k = 0; k <= 1000; ++k) c.push_back(std::exp(-0.01 * k));
  auto r = integrate_vacf(c, 0.01);
  CHECK_FALSE(r.divergent);
  CHECK(r.t_cut == Catch::Approx(std::log(100.0)).margin(0.011));
  CHECK(r.diffusion == Catch::Approx((1 - std::exp(-r.t_cut)) / 3).epsilon(1e-4));
}

TEST_CASE("streaming VACF equals direct averaging", "[md][diffusion]") {
  std::mt19937_64 rng(13);
  FrameTrajectory vel{Channel::velocity, 0.01, 1, 4, {}};
  for (int f = 0; f < 60; ++f) vel.append_frame(testing_support::random_vectors(rng, 4));
  VacfAccumulator acc(4, 10, 3);
  for (std::size_t f = 0; f < vel.n_frames(); ++f) acc.push(vel.frame(f));
  auto c = acc.vacf();
  REQUIRE(c.size() == 11);
  for (std::size_t k = 0; k <= 10; ++k) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t t0 = 0; t0 + k < vel.n_frames(); t0 += 3)
      for (std::size_t p = 0; p < 4; ++p, ++n) s += dot(vel.at(t0, p), vel.at(t0 + k, p));
    CHECK(c[k] == Catch::Approx(s / n).epsilon(1e-13));
  }
}

// ---------------------------------------------------------------------------
// simulation driver
// ---------------------------------------------------------------------------

TEST_CASE("NVE production conserves momentum and energy", "[md][simulation]") {
  SimConfig c;
  c.n_particles = 108;
  c.box_length = box_for_density(108, 0.8);
  c.temperature = 0.9;
  c.n_steps_equil = 500;
  c.n_steps_prod = 2000;
  c.seed = 17;
  auto s = run_simulation(c);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.momentum_change[k]) < 1e-9);
  CHECK(s.energy_drift < 1e-4);
  CHECK(s.velocity_frames == 2000);
  CHECK(s.position_frames == 200);
}

TEST_CASE("sampling stride picks the same frames", "[md][simulation]") {
  SimConfig c;
  c.n_particles = 108;
  c.box_length = box_for_density(108, 0.8);
  c.n_steps_equil = 200;
  c.n_steps_prod = 300;
  c.seed = 5;
  std::vector<std::vector<Vec3>> every, tenth;
  SimulationObserver o1, o10;
  o1.on_velocity_frame = [&](std::size_t, std::span<const Vec3> v) { every.emplace_back(v.begin(), v.end()); };
  o10.on_velocity_frame = [&](std::size_t, std::span<const Vec3> v) { tenth.emplace_back(v.begin(), v.end()); };
  run_simulation(c, o1);
  c.sample_stride = 10;
  run_simulation(c, o10);
  REQUIRE(tenth.size() == 30);
  for (std::size_t k = 0; k < tenth.size(); ++k) CHECK(tenth[k] == every[10 * k]);
}

TEST_CASE("simulation is reproducible and the thermostat holds temperature", "[md][simulation]") {
  SimConfig c;
  c.n_particles = 108;
  c.box_length = box_for_density(108, 0.8);
  c.n_steps_equil = 300;
  c.n_steps_prod = 100;
  c.seed = 3;
  std::vector<Vec3> a, b;
  SimulationObserver oa, ob;
  oa.on_velocity_frame = [&](std::size_t, std::span<const Vec3> v) { a.assign(v.begin(), v.end()); };
  ob.on_velocity_frame = [&](std::size_t, std::span<const Vec3> v) { b.assign(v.begin(), v.end()); };
  run_simulation(c, oa);
  run_simulation(c, ob);
  CHECK(a == b);

  // thermostatted LJ liquid, time-averaged kinetic temperature
  const double box = box_for_density(500, 0.8);
  ForceField field(box, 2.5);
  std::mt19937_64 rng(21);
  auto s = make_state(fcc_init(5, box), maxwell_boltzmann(500, 0.9, rng), field);
  LangevinIntegrator lang(0.9, 1.0, 0.005, 22);
  for (int i = 0; i < 2000; ++i) lang.step(s, field);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    lang.step(s, field);
    sum += kinetic_temperature(s.kinetic_energy, s.size());
  }
  CHECK(std::abs(sum / 10000 / 0.9 - 1.0) < 0.02);
}
