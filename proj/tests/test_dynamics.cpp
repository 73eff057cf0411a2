#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "spinchain/dynamics.hpp"

using namespace spinchain;
using std::numbers::pi;

TEST_CASE("stroboscopic grids") {
  const TimeGrid g1 = stroboscopic_times(2.0 * pi, 3.0);
  REQUIRE(g1.samples.size() == 4);
  for (int n = 0; n <= 3; ++n) CHECK(std::abs(g1.samples[n] - n) < 1e-12);

  const TimeGrid g2 = stroboscopic_times(100.0, 1.0);
  REQUIRE(g2.samples.size() == 16);
  CHECK(g2.samples[0] == 0.0);
  CHECK(std::abs(g2.samples[1] - 0.06283) < 1e-5);

  // horizon shorter than one period leaves only t = 0
  CHECK(stroboscopic_times(1.0, 0.5).samples == std::vector<double>{0.0});

  CHECK_THROWS_AS(stroboscopic_times(-1.0, 1.0), ConfigError);
}

TEST_CASE("uniform grids and grid validation") {
  const TimeGrid g = uniform_grid(0.0, 2.0, 5);
  CHECK(g.samples == std::vector<double>({0.0, 0.5, 1.0, 1.5, 2.0}));
  CHECK(uniform_grid(0.3, 1.0, 1).samples == std::vector<double>{0.3});

  CHECK_THROWS_AS(validate_grid({{}}), ConfigError);
  CHECK_THROWS_AS(validate_grid({{-0.1, 0.5}}), ConfigError);
  CHECK_THROWS_AS(validate_grid({{0.0, 0.5, 0.5}}), ConfigError);
}

TEST_CASE("constant evolution closed forms") {
  // zero generator: the state never moves
  const State plus = basis_product_state(1, {0}, Axis::Z) * std::sqrt(0.5) +
                     basis_product_state(1, {1}, Axis::Z) * std::sqrt(0.5);
  const auto frozen = evolve_constant(Operator::Zero(2, 2), plus, {{0.0, 1.0, 2.0}});
  for (const State& s : frozen.states) CHECK(max_abs(s - plus) < 1e-14);

  // single-site z rotation at t = pi/2
  const Operator z = build_pauli_operator({1, {{1, Axis::Z}}, 1.0});
  const auto rot = evolve_constant(z, plus, {{pi / 2.0}});
  State want(2);
  want << std::exp(Complex(0, -pi / 2)) * std::sqrt(0.5),
      std::exp(Complex(0, pi / 2)) * std::sqrt(0.5);
  CHECK(max_abs(rot.states[0] - want) < 1e-12);

  // two-site isotropic exchange swaps the excitation completely at t = pi/2
  const Operator h = 0.5 * (build_pauli_operator({2, {{1, Axis::X}, {2, Axis::X}}, 1.0}) +
                            build_pauli_operator({2, {{1, Axis::Y}, {2, Axis::Y}}, 1.0}));
  const State psi01 = basis_product_state(2, {0, 1}, Axis::Z);
  const State psi10 = basis_product_state(2, {1, 0}, Axis::Z);
  const auto swap = evolve_constant(h, psi01, {{pi / 2.0}});
  CHECK(std::abs(state_fidelity(swap.states[0], psi10) - 1.0) < 1e-12);
}

TEST_CASE("constant evolution invariants") {
  const ChainModel m{3, Family::Ising, {1.0, 0.7}, {}, 0, {}};
  const Operator h = build_static_hamiltonian(m);
  const State psi0 = basis_product_state(3, {0, 1, 1}, Axis::Z);
  const auto run = evolve_constant(h, psi0, uniform_grid(0.0, 5.0, 21));

  const double e0 = std::real(psi0.dot(h * psi0));
  for (const State& s : run.states) {
    CHECK(std::abs(s.norm() - 1.0) < 1e-9);
    CHECK(std::abs(std::real(s.dot(h * s)) - e0) < 1e-9);
  }

  Operator skew = h;
  skew(0, 1) += Complex(0, 0.1);
  CHECK_THROWS_AS(evolve_constant(skew, psi0, {{1.0}}), NumericalError);
  CHECK_THROWS_AS(evolve_constant(h, basis_product_state(2, {0, 1}, Axis::Z), {{1.0}}),
                  ShapeError);
}

TEST_CASE("density conjugation matches pure evolution") {
  const ChainModel m{2, Family::XY, {1.0}, {0.5}, 0, {}};
  const Operator h = build_static_hamiltonian(m);
  const State psi0 = basis_product_state(2, {0, 1}, Axis::Z);
  const TimeGrid grid = uniform_grid(0.0, 3.0, 7);

  const auto pure = evolve_constant(h, psi0, grid);
  const auto dens = evolve_constant(h, projector(psi0), grid);
  for (std::size_t k = 0; k < grid.samples.size(); ++k) {
    CHECK(max_abs(dens.states[k] - projector(pure.states[k])) < 1e-12);
    CHECK_NOTHROW(validate_density(dens.states[k], 1e-9));
  }
}

TEST_CASE("driven evolution with the drive off") {
  const ChainModel m{3, Family::Ising, {1.0, 1.0}, {}, 0, {}};
  const DriveSpec d{Axis::Z, 0.0, 50.0};
  const State psi0 = basis_product_state(3, {0, 1, 1}, Axis::Z);
  // sample times off the substep lattice on purpose
  const TimeGrid grid{{0.3, 0.7, 1.1}};

  const auto driven = evolve_driven(m, d, psi0, grid);
  const auto constant = evolve_constant(build_static_hamiltonian(m), psi0, grid);
  for (std::size_t k = 0; k < grid.samples.size(); ++k)
    CHECK(1.0 - state_fidelity(driven.states[k], constant.states[k]) < 1e-8);
  CHECK(driven.meta.converged);
}

TEST_CASE("single spin under the bare drive") {
  // H(t) = g cos(omega t) Z integrates to a z rotation by g sin(omega t)/omega
  const DriveSpec d{Axis::Z, 1.7, 6.0};
  State psi0(2);
  psi0 << std::sqrt(0.3), std::sqrt(0.7);
  const TimeGrid grid{{0.21, 0.63, 1.05, 2.0}};
  // the midpoint rule is second order, so a tight phase target needs a
  // fine substep lattice; a single spin makes this cheap
  const auto run = evolve_driven(Operator::Zero(2, 2), d, psi0, grid, {16384, 1e-8, true});
  for (std::size_t k = 0; k < grid.samples.size(); ++k) {
    const State exact = control_frame_unitary(d, 1, grid.samples[k]) * psi0;
    CHECK(max_abs(run.states[k] - exact) < 1e-8);
  }
}

TEST_CASE("driven propagator against a brute-force integrator") {
  const ChainModel m{2, Family::Ising, {1.0}, {}, 0, {}};
  const double omega = 25.0;
  const DriveSpec d{Axis::Z, calibrate_drive(0.5, omega), omega};
  // y-basis product state: spreads over every z-magnetization sector, so the
  // drive term acts nontrivially along the whole trajectory
  const State psi0 = basis_product_state(2, {0, 1}, Axis::Y);
  const double t_end = 2.0 * (2.0 * pi / omega);

  PropagatorConfig cfg;
  cfg.steps_per_period = 1024;  // second-order scheme vs a 1e-6 target
  const auto run = evolve_driven(m, d, psi0, {{t_end}}, cfg);

  const Operator hs = build_static_hamiltonian(m);
  const Operator zsum = build_pauli_operator({2, {{1, Axis::Z}}, 1.0}) +
                        build_pauli_operator({2, {{2, Axis::Z}}, 1.0});
  const auto h_at = [&](double t) { return Operator(hs + drive_value(d, t) * zsum); };
  const long fine_steps = 10L * 2 * cfg.steps_per_period;
  const State ref = oracle::rk4_evolve(h_at, psi0, 0.0, t_end, fine_steps);

  CHECK(max_abs(run.states[0] - ref) < 1e-6);
}

TEST_CASE("stroboscopic agreement with the effective chain") {
  ChainModel m{5, Family::Ising, {}, {}, 0, {}};
  m.jx = CouplingProfile::pst().expand(5, 4);
  const double omega = 100.0 * max_coupling(m);
  const DriveSpec d{Axis::Z, calibrate_drive(0.0, omega), omega};
  const State psi0 = basis_product_state(5, {0, 1, 1, 1, 1}, Axis::Z);
  const TimeGrid grid = stroboscopic_times(omega, 1.6);

  const auto driven = evolve_driven(m, d, psi0, grid, {64, 1e-8, false});
  const auto eff = evolve_constant(effective_hamiltonian(m, d), psi0, grid);
  for (std::size_t k = 0; k < grid.samples.size(); ++k)
    CHECK(state_fidelity(driven.states[k], eff.states[k]) >= 0.99);
  CHECK(driven.meta.high_frequency);
}

TEST_CASE("truncation error falls as the drive speeds up") {
  const ChainModel m{3, Family::Ising, {1.0, 1.0}, {}, 0, {}};
  const State psi0 = basis_product_state(3, {0, 1, 1}, Axis::Z);
  // common stroboscopic time for all three frequencies
  const double t_end = 8.0 * (2.0 * pi / 25.0);

  std::vector<double> errs;
  for (double omega : {25.0, 50.0, 100.0}) {
    const DriveSpec d{Axis::Z, calibrate_drive(0.0, omega), omega};
    const auto driven = evolve_driven(m, d, psi0, {{t_end}}, {64, 1e-8, false});
    const auto eff = evolve_constant(effective_hamiltonian(m, d), psi0, {{t_end}});
    errs.push_back(1.0 - state_fidelity(driven.states[0], eff.states[0]));
  }
  CHECK(errs[0] > errs[1]);
  CHECK(errs[1] > errs[2]);
}

TEST_CASE("doubling check flags a coarse run") {
  const ChainModel m{2, Family::Ising, {1.0}, {}, 0, {}};
  const double omega = 8.0;
  const DriveSpec d{Axis::Z, calibrate_drive(0.0, omega), omega};
  const State psi0 = basis_product_state(2, {0, 1}, Axis::Y);
  const TimeGrid grid{{2.0 * (2.0 * pi / omega)}};

  const auto coarse = evolve_driven(m, d, psi0, grid, {16, 1e-12, true});
  CHECK_FALSE(coarse.meta.converged);
  CHECK(coarse.meta.doubling_error > 1e-12);
  CHECK(coarse.meta.steps_per_period == 16);

  const auto relaxed = evolve_driven(m, d, psi0, grid, {64, 1e-2, true});
  CHECK(relaxed.meta.converged);
  CHECK_FALSE(relaxed.meta.high_frequency);  // omega = 8 < 20 max|J|
}

TEST_CASE("propagator configuration validation") {
  const ChainModel m{2, Family::Ising, {1.0}, {}, 0, {}};
  const DriveSpec d{Axis::Z, 1.0, 30.0};
  const State psi0 = basis_product_state(2, {0, 1}, Axis::Z);
  CHECK_THROWS_AS(evolve_driven(m, d, psi0, {{1.0}}, {8, 1e-8, true}), ConfigError);
  CHECK_THROWS_AS(evolve_driven(m, d, psi0, {{1.0}}, {17, 1e-8, true}), ConfigError);
  CHECK_THROWS_AS(evolve_driven(m, d, psi0, {{1.0}}, {64, -1.0, true}), ConfigError);
  CHECK_THROWS_AS(evolve_driven(m, {Axis::Z, 1.0, -3.0}, psi0, {{1.0}}), ConfigError);
}

TEST_CASE("unitarity along driven trajectories") {
  const ChainModel m{4, Family::XY, {1, 1, 1}, {0.5, 0.5, 0.5}, 0, {}};
  const double omega = 40.0;
  const DriveSpec d{Axis::Y, calibrate_drive(0.2, omega), omega};
  const State psi0 = basis_product_state(4, {0, 1, 1, 1}, Axis::Y);
  const auto run = evolve_driven(m, d, psi0, uniform_grid(0.1, 2.1, 9), {64, 1e-8, false});
  for (const State& s : run.states) CHECK(std::abs(s.norm() - 1.0) < 1e-9);
}
