#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "operators.hpp"

namespace spinchain {

struct NoiseSpec {
  double mu = 0.0;
  double sigma = 0.5;
  double tau = 0.005;
  std::vector<Axis> axes;
  int trials = 20;
  std::uint64_t master_seed = 0;
};

inline void validate_noise(const NoiseSpec& spec) {
  if (spec.sigma < 0.0) throw ConfigError("noise sigma must be nonnegative");
  if (spec.tau <= 0.0) throw ConfigError("noise tau must be positive");
  if (spec.trials < 1) throw ConfigError("noise needs at least one trial");
}

// one scalar noise stream, held piecewise-constant between lattice points
struct OUTrajectory {
  TimeGrid grid;
  std::vector<double> values;
};

struct StreamId {
  int trial = 0;
  int site = 1;
  Axis axis = Axis::X;
};

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t master_seed, const StreamId& id) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(id.trial),
                    static_cast<std::uint32_t>(id.site),
                    static_cast<std::uint32_t>(id.axis)};
  return std::mt19937_64(seq);
}

// Box-Muller on fixed 53-bit uniforms; std::normal_distribution is
// implementation-defined, which would break bit-reproducibility across
// standard libraries
inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  const double u2 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

// Stationary Ornstein-Uhlenbeck samples on the given lattice, using the
// exact AR(1) update so no discretization bias enters the statistics:
// B(t+d) = mu + (B(t)-mu) e^(-d/tau) + sigma sqrt(1-e^(-2d/tau)) xi.
inline OUTrajectory sample_ou(const NoiseSpec& spec, const TimeGrid& grid,
                              const StreamId& id) {
  validate_noise(spec);
  validate_grid(grid);
  auto rng = detail::stream_rng(spec.master_seed, id);
  OUTrajectory traj{grid, {}};
  traj.values.reserve(grid.samples.size());
  double b = spec.mu + spec.sigma * detail::standard_normal(rng);
  traj.values.push_back(b);
  for (std::size_t k = 1; k < grid.samples.size(); ++k) {
    const double delta = grid.samples[k] - grid.samples[k - 1];
    const double decay = std::exp(-delta / spec.tau);
    b = spec.mu + (b - spec.mu) * decay +
        spec.sigma * std::sqrt(1.0 - decay * decay) * detail::standard_normal(rng);
    traj.values.push_back(b);
  }
  return traj;
}

struct NoisyEvolutionResult {
  TimeGrid grid;
  std::vector<Density> averaged;
  std::vector<std::vector<State>> trials;  // [trial][sample]
  RunMeta meta;
};

namespace detail {

struct NoisyMatVec {
  const Operator& h_static;
  const std::optional<DriveSpec>& drive;
  double drive_coeff;
  const std::vector<std::vector<std::vector<double>>>& noise;  // [site-1][axis][cell]
  const std::vector<Axis>& axes;
  long cell;
  State operator()(const State& v) const {
    State w = h_static * v;
    if (drive && drive_coeff != 0.0) w += drive_coeff * apply_site_sum(drive->axis, v);
    const int n = static_cast<int>(noise.size());
    for (int site = 1; site <= n; ++site)
      for (std::size_t a = 0; a < axes.size(); ++a)
        accumulate_single_pauli(axes[a], site, noise[site - 1][a][cell], v, w);
    return w;
  }
};

}  // namespace detail

// Ensemble evolution under H_static (+ drive) + per-site noise fields held
// piecewise-constant on the substep lattice.  The averaged density matrix is
// the equal-weight mean of the trial projectors in trial order; the trial
// states are kept for observables that do not commute with averaging.
inline NoisyEvolutionResult evolve_noisy(const Operator& h_static,
                                         const std::optional<DriveSpec>& d,
                                         const NoiseSpec& spec, const State& psi0,
                                         const TimeGrid& grid,
                                         const PropagatorConfig& cfg = {}) {
  validate_grid(grid);
  validate_config(cfg);
  validate_noise(spec);
  if (h_static.rows() != h_static.cols() || h_static.rows() != psi0.size())
    throw ShapeError("hamiltonian and state dimensions disagree");
  if (d && d->omega <= 0.0) throw ConfigError("omega must be positive");

  const int n = n_sites_of_dim(psi0.size());
  // with a drive the lattice follows the drive period; without one the noise
  // correlation time sets the resolution
  const double delta = d ? (2.0 * std::numbers::pi / d->omega) / cfg.steps_per_period
                         : spec.tau / 8.0;
  const double t_max = grid.samples.back();
  const auto n_cells = std::max<long>(1, static_cast<long>(std::ceil(t_max / delta - 1e-9)));
  TimeGrid lattice;
  lattice.samples.reserve(n_cells);
  for (long k = 0; k < n_cells; ++k) lattice.samples.push_back(k * delta);

  const double hs_norm = detail::norm_bound(h_static);
  const int dim = static_cast<int>(psi0.size());

  NoisyEvolutionResult result;
  result.grid = grid;
  result.meta.description = "noisy (" + std::to_string(spec.trials) + " trials)";
  result.meta.steps_per_period = d ? cfg.steps_per_period : 0;
  result.averaged.assign(grid.samples.size(), Density::Zero(dim, dim));
  result.trials.reserve(spec.trials);

  for (int trial = 0; trial < spec.trials; ++trial) {
    // one independent stream per (site, axis)
    std::vector<std::vector<std::vector<double>>> noise(
        n, std::vector<std::vector<double>>(spec.axes.size()));
    std::vector<double> cell_amp(n_cells, 0.0);
    for (int site = 1; site <= n; ++site)
      for (std::size_t a = 0; a < spec.axes.size(); ++a) {
        auto traj = sample_ou(spec, lattice, {trial, site, spec.axes[a]});
        for (long k = 0; k < n_cells; ++k) cell_amp[k] += std::abs(traj.values[k]);
        noise[site - 1][a] = std::move(traj.values);
      }

    State psi = psi0;
    std::vector<State> samples;
    samples.reserve(grid.samples.size());
    double t_prev = 0.0;
    for (double ts : grid.samples) {
      detail::walk_lattice(t_prev, ts, delta, [&](double a, double b, long cell) {
        cell = std::min<long>(cell, n_cells - 1);
        const double tm = 0.5 * (a + b);
        const double c = d ? drive_value(*d, tm) : 0.0;
        const double theta =
            (hs_norm + std::abs(c) * n + cell_amp[cell]) * (b - a);
        psi = detail::expm_multiply(
            detail::NoisyMatVec{h_static, d, c, noise, spec.axes, cell}, b - a,
            std::move(psi), theta);
      });
      if (std::abs(psi.norm() - 1.0) > 1e-9)
        throw NumericalError("norm drifted during noisy evolution (trial " +
                             std::to_string(trial) + ")");
      samples.push_back(psi);
      t_prev = ts;
    }
    for (std::size_t k = 0; k < samples.size(); ++k)
      result.averaged[k] += projector(samples[k]);
    result.trials.push_back(std::move(samples));
  }
  for (Density& rho : result.averaged) rho /= static_cast<double>(spec.trials);
  return result;
}

inline NoisyEvolutionResult evolve_noisy(const ChainModel& m,
                                         const std::optional<DriveSpec>& d,
                                         const NoiseSpec& spec, const State& psi0,
                                         const TimeGrid& grid,
                                         const PropagatorConfig& cfg = {}) {
  NoisyEvolutionResult result =
      evolve_noisy(build_static_hamiltonian(m), d, spec, psi0, grid, cfg);
  result.meta.description += " " + family_name(m.family);
  if (d) result.meta.high_frequency = is_high_frequency(m, *d);
  return result;
}

// Per-period average of the frame-rotated single-site noise generator,
// reported as an operator norm.  Noise along the drive axis passes through
// untouched; the transverse plane turns by 4 g sin(omega t)/omega, whose
// period-averaged cosine is J0(4g/omega) -- zero exactly at the calibrated
// decoupling point.
inline double decoupling_residual(const DriveSpec& d, const std::vector<Axis>& axes,
                                  const std::vector<double>& amplitudes,
                                  int nodes = 2048) {
  if (axes.size() != amplitudes.size())
    throw ConfigError("one amplitude per noise axis required");
  if (nodes < 1024) throw ConfigError("decoupling quadrature needs >= 1024 nodes");
  if (d.omega <= 0.0) throw ConfigError("omega must be positive");

  // transverse pair (a1, a2) follows the cyclic order x -> y -> z -> x
  const auto cyclic = [](Axis a) -> std::pair<Axis, Axis> {
    switch (a) {
      case Axis::X: return {Axis::Y, Axis::Z};
      case Axis::Y: return {Axis::Z, Axis::X};
      default: return {Axis::X, Axis::Y};
    }
  };
  const auto [t1, t2] = cyclic(d.axis);

  const double period = 2.0 * std::numbers::pi / d.omega;
  Operator avg = Operator::Zero(2, 2);
  for (int k = 0; k < nodes; ++k) {
    const double t = (k + 0.5) * period / nodes;
    const double phi = 4.0 * drive_integral(d, t);
    Operator m = Operator::Zero(2, 2);
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (axes[a] == d.axis) {
        m += amplitudes[a] * pauli_matrix(axes[a]);
      } else {
        // rotate within the transverse plane
        const Operator p1 = pauli_matrix(t1), p2 = pauli_matrix(t2);
        if (axes[a] == t1)
          m += amplitudes[a] * (std::cos(phi) * p1 + std::sin(phi) * p2);
        else
          m += amplitudes[a] * (std::cos(phi) * p2 - std::sin(phi) * p1);
      }
    }
    avg += m;
  }
  avg /= static_cast<double>(nodes);
  return operator_norm(avg);
}

}  // namespace spinchain
