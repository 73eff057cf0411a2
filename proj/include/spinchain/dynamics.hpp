#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "models.hpp"
#include "operators.hpp"

namespace spinchain {

struct TimeGrid {
  std::vector<double> samples;
};

inline void validate_grid(const TimeGrid& grid) {
  if (grid.samples.empty()) throw ConfigError("time grid has no samples");
  if (grid.samples.front() < 0.0) throw ConfigError("time grid starts before 0");
  for (std::size_t i = 1; i < grid.samples.size(); ++i)
    if (grid.samples[i] <= grid.samples[i - 1])
      throw ConfigError("time grid samples must increase strictly");
}

// t_n = 2 pi n / omega up to the horizon; at these times the control frame
// returns to the identity
inline TimeGrid stroboscopic_times(double omega, double horizon) {
  if (omega <= 0.0) throw ConfigError("omega must be positive");
  if (horizon < 0.0) throw ConfigError("horizon must be nonnegative");
  const double period = 2.0 * std::numbers::pi / omega;
  const auto n_max = static_cast<long>(std::floor(horizon / period + 1e-9));
  TimeGrid grid;
  grid.samples.reserve(n_max + 1);
  for (long n = 0; n <= n_max; ++n) grid.samples.push_back(n * period);
  return grid;
}

inline TimeGrid uniform_grid(double t_start, double t_end, int n_samples) {
  if (n_samples < 1) throw ConfigError("grid needs at least one sample");
  if (n_samples == 1) return {{t_start}};
  if (t_end <= t_start) throw ConfigError("grid end must exceed start");
  TimeGrid grid;
  grid.samples.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k)
    grid.samples.push_back(t_start + k * (t_end - t_start) / (n_samples - 1));
  return grid;
}

struct PropagatorConfig {
  int steps_per_period = 64;
  // converged means doubling the substep count moves the final-state
  // fidelity by less than this; the default is strict, so runs that only
  // need plotting accuracy should declare the budget they actually require
  double convergence_tol = 1e-8;
  // the doubling check triples the propagation cost; scenarios may opt out
  bool check_convergence = true;
};

inline void validate_config(const PropagatorConfig& cfg) {
  if (cfg.steps_per_period < 16) throw ConfigError("steps_per_period must be >= 16");
  if (cfg.steps_per_period % 2) throw ConfigError("steps_per_period must be even");
  if (cfg.convergence_tol <= 0.0) throw ConfigError("convergence_tol must be positive");
}

struct RunMeta {
  std::string description;
  bool high_frequency = true;
  bool converged = true;       // doubling the substep count moved the final
  double doubling_error = 0.0; // state by less than convergence_tol
  int steps_per_period = 0;
};

struct EvolutionResult {
  TimeGrid grid;
  std::vector<State> states;
  RunMeta meta;
};

struct DensityEvolutionResult {
  TimeGrid grid;
  std::vector<Density> states;
  RunMeta meta;
};

inline double state_fidelity(const State& a, const State& b) {
  return std::norm(a.dot(b));
}

namespace detail {

// y = exp(-i dt H) v by Taylor summation of the matrix exponential applied to
// the vector; theta bounds ||H|| dt and triggers internal step splitting
template <class MatVec>
State expm_multiply(const MatVec& hv, double dt, State v, double theta) {
  const int pieces = std::max(1, static_cast<int>(std::ceil(theta / 0.9)));
  const Complex z(0.0, -dt / pieces);
  for (int p = 0; p < pieces; ++p) {
    State term = v;
    State acc = v;
    bool done = false;
    for (int k = 1; k <= 80; ++k) {
      term = (z / static_cast<double>(k)) * hv(term);
      acc += term;
      if (term.norm() <= 1e-16 * acc.norm()) { done = true; break; }
    }
    if (!done) throw NumericalError("substep exponential did not converge");
    v = std::move(acc);
  }
  return v;
}

// split [t0, t1] at the lattice points k*delta and call step(a, b, cell)
// for each piece, where cell is the lattice cell containing (a+b)/2
template <class StepFn>
void walk_lattice(double t0, double t1, double delta, StepFn&& step) {
  const double eps = 1e-12 * std::max({1.0, std::abs(t1), delta});
  double t = t0;
  auto cell = static_cast<long>(std::floor(t0 / delta + 1e-9));
  while (t1 - t > eps) {
    const double boundary = (cell + 1) * delta;
    const double t_next = std::min(t1, boundary);
    if (t_next - t > eps) step(t, t_next, cell);
    if (boundary <= t_next + eps) ++cell;
    t = t_next;
  }
}

// inf-norm upper bound for the spectral norm of a dense operator
inline double norm_bound(const Operator& h) {
  return h.size() ? h.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

struct DrivenMatVec {
  const Operator& h_static;
  Axis axis;
  double coeff;
  State operator()(const State& v) const {
    State w = h_static * v;
    if (coeff != 0.0) w += coeff * apply_site_sum(axis, v);
    return w;
  }
};

// one full trajectory of the driven chain, sampled at grid.samples; the
// substep lattice is anchored at t = 0
inline std::vector<State> propagate_driven(const Operator& h_static, const DriveSpec& d,
                                           const State& psi0, const TimeGrid& grid,
                                           int steps_per_period) {
  const double delta = (2.0 * std::numbers::pi / d.omega) / steps_per_period;
  const double hs_norm = norm_bound(h_static);
  const int n = n_sites_of_dim(psi0.size());
  State psi = psi0;
  std::vector<State> out;
  out.reserve(grid.samples.size());
  double t_prev = 0.0;
  for (double ts : grid.samples) {
    walk_lattice(t_prev, ts, delta, [&](double a, double b, long) {
      const double tm = 0.5 * (a + b);
      const double c = drive_value(d, tm);
      const double theta = (hs_norm + std::abs(c) * n) * (b - a);
      psi = expm_multiply(DrivenMatVec{h_static, d.axis, c}, b - a, std::move(psi),
                          theta);
    });
    out.push_back(psi);
    t_prev = ts;
  }
  return out;
}

}  // namespace detail

// |psi(t)> = exp(-i H t) |psi0> through the eigendecomposition of H
inline EvolutionResult evolve_constant(const Operator& h, const State& psi0,
                                       const TimeGrid& grid) {
  validate_grid(grid);
  if (h.rows() != h.cols() || h.rows() != psi0.size())
    throw ShapeError("hamiltonian and state dimensions disagree");
  if (!is_hermitian(h, 1e-10 * std::max(1.0, max_abs(h))))
    throw NumericalError("constant evolution needs a Hermitian hamiltonian");

  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Operator& v = es.eigenvectors();
  const State c0 = v.adjoint() * psi0;

  EvolutionResult result;
  result.grid = grid;
  result.meta.description = "constant";
  result.states.reserve(grid.samples.size());
  for (double t : grid.samples) {
    State phases(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k)
      phases(k) = std::exp(Complex(0.0, -lam(k) * t)) * c0(k);
    State psi = v * phases;
    if (std::abs(psi.norm() - psi0.norm()) > 1e-9)
      throw NumericalError("norm drifted during constant evolution");
    result.states.push_back(std::move(psi));
  }
  return result;
}

// density-matrix variant: rho(t) = U rho U^dag with the same spectral route
inline DensityEvolutionResult evolve_constant(const Operator& h, const Density& rho0,
                                              const TimeGrid& grid) {
  validate_grid(grid);
  if (h.rows() != h.cols() || h.rows() != rho0.rows() || rho0.rows() != rho0.cols())
    throw ShapeError("hamiltonian and density dimensions disagree");
  if (!is_hermitian(h, 1e-10 * std::max(1.0, max_abs(h))))
    throw NumericalError("constant evolution needs a Hermitian hamiltonian");

  Eigen::SelfAdjointEigenSolver<Operator> es(h);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Operator& v = es.eigenvectors();
  const Density rho_eig = v.adjoint() * rho0 * v;

  DensityEvolutionResult result;
  result.grid = grid;
  result.meta.description = "constant density";
  result.states.reserve(grid.samples.size());
  for (double t : grid.samples) {
    Density rot = rho_eig;
    for (Eigen::Index i = 0; i < rot.rows(); ++i)
      for (Eigen::Index j = 0; j < rot.cols(); ++j)
        rot(i, j) *= std::exp(Complex(0.0, -(lam(i) - lam(j)) * t));
    result.states.push_back(v * rot * v.adjoint());
  }
  return result;
}

// Piecewise-constant midpoint propagation of i d|psi>/dt = H(t)|psi> on a
// substep lattice of (2 pi/omega)/steps_per_period.  The optional doubling
// run flags (never throws on) insufficient resolution.
inline EvolutionResult evolve_driven(const Operator& h_static, const DriveSpec& d,
                                     const State& psi0, const TimeGrid& grid,
                                     const PropagatorConfig& cfg = {}) {
  validate_grid(grid);
  validate_config(cfg);
  if (h_static.rows() != h_static.cols() || h_static.rows() != psi0.size())
    throw ShapeError("hamiltonian and state dimensions disagree");
  if (d.omega <= 0.0) throw ConfigError("omega must be positive");

  EvolutionResult result;
  result.grid = grid;
  result.meta.steps_per_period = cfg.steps_per_period;
  result.meta.description = "driven";
  result.states = detail::propagate_driven(h_static, d, psi0, grid, cfg.steps_per_period);

  for (const State& psi : result.states)
    if (std::abs(psi.norm() - 1.0) > 1e-9)
      throw NumericalError("norm drifted during driven evolution");

  if (cfg.check_convergence) {
    TimeGrid last{{grid.samples.back()}};
    if (last.samples[0] <= 0.0) {
      result.meta.doubling_error = 0.0;
    } else {
      const State fine =
          detail::propagate_driven(h_static, d, psi0, last, 2 * cfg.steps_per_period)
              .back();
      result.meta.doubling_error = 1.0 - state_fidelity(result.states.back(), fine);
      result.meta.converged = result.meta.doubling_error < cfg.convergence_tol;
    }
  }
  return result;
}

inline EvolutionResult evolve_driven(const ChainModel& m, const DriveSpec& d,
                                     const State& psi0, const TimeGrid& grid,
                                     const PropagatorConfig& cfg = {}) {
  EvolutionResult result = evolve_driven(build_static_hamiltonian(m), d, psi0, grid, cfg);
  result.meta.description = "driven " + family_name(m.family);
  result.meta.high_frequency = is_high_frequency(m, d);
  return result;
}

}  // namespace spinchain
