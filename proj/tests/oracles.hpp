#pragma once

// Brute-force reference integrators used only by the test suite, kept
// deliberately independent of the library's propagators.

#include "spinchain/operators.hpp"

namespace oracle {

// classic fixed-step RK4 for i d|psi>/dt = H(t)|psi>
template <class HamAt>
spinchain::State rk4_evolve(const HamAt& h_at, spinchain::State psi, double t0,
                            double t1, long steps) {
  using spinchain::Complex;
  using spinchain::State;
  const double h = (t1 - t0) / steps;
  const Complex mi(0.0, -1.0);
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const State k1 = mi * (h_at(t) * psi);
    const State k2 = mi * (h_at(t + 0.5 * h) * (psi + 0.5 * h * k1));
    const State k3 = mi * (h_at(t + 0.5 * h) * (psi + 0.5 * h * k2));
    const State k4 = mi * (h_at(t + h) * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi;
}

// literal textbook concurrence: lambda_i from R = sqrt(sqrt(rho) rho_tilde
// sqrt(rho)), nested matrix square roots and all
inline double wootters_nested_sqrt(const spinchain::Density& rho) {
  using namespace spinchain;
  const auto matsqrt = [](const Density& m) {
    Eigen::SelfAdjointEigenSolver<Density> es(m);
    return Density(es.eigenvectors() *
                   es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                   es.eigenvectors().adjoint());
  };
  const Operator yy = kronecker(pauli_matrix(Axis::Y), pauli_matrix(Axis::Y));
  const Density tilde = yy * rho.conjugate() * yy;
  const Density root = matsqrt(rho);
  const Density r = matsqrt(Density(root * tilde * root));
  Eigen::SelfAdjointEigenSolver<Density> es(r, Eigen::EigenvaluesOnly);
  const auto& l = es.eigenvalues();  // ascending
  return std::max(0.0, l(3) - l(2) - l(1) - l(0));
}

}  // namespace oracle
