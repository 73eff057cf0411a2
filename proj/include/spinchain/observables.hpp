#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "dynamics.hpp"
#include "errors.hpp"
#include "operators.hpp"

namespace spinchain {

struct TransferTask {
  State initial;
  State target;
  std::string description;
};

inline void validate_task(const TransferTask& task) {
  if (task.initial.size() != task.target.size())
    throw ShapeError("transfer endpoints live in different spaces");
  if (std::abs(task.initial.norm() - 1.0) > 1e-10 ||
      std::abs(task.target.norm() - 1.0) > 1e-10)
    throw NumericalError("transfer endpoints must be normalized");
}

// send the flipped site from one end of the chain to the other: initial
// |0>|1>...|1>, target |1>...|1>|0>, prepared in the z or y basis
inline TransferTask end_transfer_task(int n_sites, Axis basis) {
  std::vector<int> head(n_sites, 1), tail(n_sites, 1);
  head.front() = 0;
  tail.back() = 0;
  return {basis_product_state(n_sites, head, basis),
          basis_product_state(n_sites, tail, basis),
          "end-to-end transfer (" + axis_name(basis) + " basis)"};
}

struct ConcurrenceSeries {
  TimeGrid grid;
  std::pair<int, int> pair;
  std::vector<double> values;
};

// F = <target| rho |target>, clamped onto [0, 1]
inline double fidelity(const Density& rho, const State& target) {
  if (rho.rows() != target.size() || rho.cols() != target.size())
    throw ShapeError("fidelity target does not match the density matrix");
  const double f = std::real(target.dot(rho * target));
  return std::clamp(f, 0.0, 1.0);
}

inline double fidelity(const State& psi, const State& target) {
  if (psi.size() != target.size())
    throw ShapeError("fidelity target does not match the state");
  return std::clamp(state_fidelity(psi, target), 0.0, 1.0);
}

// Wootters concurrence of a two-qubit density matrix.  The lambda_i are the
// square roots of the eigenvalues of rho * rho_tilde; spectrally identical to
// the textbook nested-square-root construction but with no matrix roots of
// nearly singular inputs.
inline double concurrence(const Density& rho) {
  if (rho.rows() != 4 || rho.cols() != 4)
    throw ShapeError("concurrence needs a two-qubit (4x4) density matrix");
  if (!is_hermitian(rho, 1e-8)) throw NumericalError("concurrence input not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > 1e-8)
    throw NumericalError("concurrence input trace differs from 1");
  {
    Eigen::SelfAdjointEigenSolver<Density> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8)
      throw NumericalError("concurrence input has a negative eigenvalue");
  }

  static const Operator yy = kronecker(pauli_matrix(Axis::Y), pauli_matrix(Axis::Y));
  const Density tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Density> es(rho * tilde, /*computeEigenvectors=*/false);
  Eigen::Vector4d lam;
  for (int k = 0; k < 4; ++k) {
    double ev = std::real(es.eigenvalues()(k));
    if (ev < 0.0 && ev > -1e-12) ev = 0.0;  // eigenvalue dust from the product form
    lam(k) = std::sqrt(std::max(ev, 0.0));
  }
  std::sort(lam.data(), lam.data() + 4, std::greater<double>());
  return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

inline ConcurrenceSeries concurrence_series(const EvolutionResult& result, int site_a,
                                            int site_b) {
  ConcurrenceSeries series{result.grid, {site_a, site_b}, {}};
  series.values.reserve(result.states.size());
  for (const State& psi : result.states)
    series.values.push_back(concurrence(partial_trace_to_pair(psi, site_a, site_b)));
  return series;
}

inline ConcurrenceSeries concurrence_series(const DensityEvolutionResult& result,
                                            int site_a, int site_b) {
  ConcurrenceSeries series{result.grid, {site_a, site_b}, {}};
  series.values.reserve(result.states.size());
  for (const Density& rho : result.states)
    series.values.push_back(concurrence(partial_trace_to_pair(rho, site_a, site_b)));
  return series;
}

template <class Result>
ConcurrenceSeries end_to_end_concurrence(const Result& result) {
  const int n = n_sites_of_dim(result.states.empty() ? 0 : result.states.front().rows());
  return concurrence_series(result, 1, n);
}

template <class Result>
ConcurrenceSeries adjacent_concurrence(const Result& result,
                                       std::pair<int, int> pair = {1, 2}) {
  return concurrence_series(result, pair.first, pair.second);
}

// H restricted to the single-flipped-site sector (one |0> among |1>s),
// ordered by the flipped site.  Total-sigma_z conservation makes this sector
// invariant; verified cheaply because sum sigma_z is diagonal.
inline Eigen::MatrixXcd single_excitation_block(const Operator& h, int n_sites) {
  const int dim = dimension(n_sites);
  if (h.rows() != dim || h.cols() != dim)
    throw ShapeError("hamiltonian dimension does not match n_sites");
  const double scale = std::max(1.0, max_abs(h));
  for (int r = 0; r < dim; ++r) {
    const int mr = n_sites - 2 * __builtin_popcount(static_cast<unsigned>(r));
    for (int c = 0; c < dim; ++c) {
      const int mc = n_sites - 2 * __builtin_popcount(static_cast<unsigned>(c));
      if (mr != mc && std::abs(h(r, c)) * std::abs(mc - mr) > 1e-10 * scale)
        throw NotExcitationConserving(
            "hamiltonian does not commute with the total z magnetization");
    }
  }
  const unsigned all_ones = (1u << n_sites) - 1u;
  Eigen::MatrixXcd block(n_sites, n_sites);
  for (int i = 1; i <= n_sites; ++i)
    for (int j = 1; j <= n_sites; ++j)
      block(i - 1, j - 1) =
          h(all_ones ^ site_mask(n_sites, i), all_ones ^ site_mask(n_sites, j));
  return block;
}

// |<e_N| exp(-i B t) |e_1>|^2 inside the single-excitation sector
inline double transfer_probability(const Eigen::MatrixXcd& block, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
  const auto& v = es.eigenvectors();
  Complex amp = 0.0;
  for (Eigen::Index k = 0; k < block.rows(); ++k)
    amp += v(block.rows() - 1, k) * std::conj(v(0, k)) *
           std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
  return std::norm(amp);
}

// Transfer time derived from the sector spectrum: for an equally spaced
// ladder the end-to-end amplitude revives at t = pi / spacing.  Returns the
// time together with the worst pairwise spacing deviation so callers can
// judge whether the ladder really is equally spaced.
struct TransferTiming {
  double time;
  double spacing;
  double spacing_spread;
};

inline TransferTiming derive_transfer_time(const Eigen::MatrixXcd& block) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block, Eigen::EigenvaluesOnly);
  const auto& lam = es.eigenvalues();
  if (lam.size() < 2) throw ShapeError("need at least two levels to derive a spacing");
  double mean = 0.0;
  for (Eigen::Index k = 1; k < lam.size(); ++k) mean += lam(k) - lam(k - 1);
  mean /= static_cast<double>(lam.size() - 1);
  if (mean <= 0.0) throw NumericalError("degenerate single-excitation spectrum");
  double spread = 0.0;
  for (Eigen::Index k = 1; k < lam.size(); ++k)
    spread = std::max(spread, std::abs(lam(k) - lam(k - 1) - mean));
  return {std::numbers::pi / mean, mean, spread};
}

}  // namespace spinchain
