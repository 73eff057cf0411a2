#pragma once

#include <eigen3/Eigen/Dense>

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"

namespace spinchain {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using State = Eigen::VectorXcd;
using Density = Eigen::MatrixXcd;

enum class Axis { X, Y, Z };

inline std::string axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "z";
  }
}

// Hilbert-space dimension of an n-site chain of qubits
inline int dimension(int n_sites) { return 1 << n_sites; }

inline int n_sites_of_dim(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim)
    throw ShapeError("dimension " + std::to_string(dim) + " is not a power of two");
  return n;
}

// Sites are 1-based and site 1 is the leftmost (most significant) tensor
// factor, so the bit of site i inside a basis index is at shift n_sites - i.
inline unsigned site_mask(int n_sites, int site) {
  return 1u << (n_sites - site);
}

// A scaled tensor product of single-site Pauli axes; sites absent from
// `factors` act as identity.
struct PauliString {
  int n_sites = 0;
  std::map<int, Axis> factors;
  Complex coefficient = 1.0;
};

inline const Eigen::Matrix2cd& pauli_matrix(Axis a) {
  static const Eigen::Matrix2cd sx = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
  static const Eigen::Matrix2cd sy =
      (Eigen::Matrix2cd() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
  static const Eigen::Matrix2cd sz = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
  switch (a) {
    case Axis::X: return sx;
    case Axis::Y: return sy;
    default: return sz;
  }
}

inline Operator kronecker(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Every Pauli string maps each basis state to exactly one basis state with a
// phase, so the dense matrix is filled one entry per column.
inline Operator build_pauli_operator(const PauliString& p) {
  if (p.n_sites < 1) throw InvalidSite("pauli string needs at least one site");
  unsigned flip = 0;
  for (const auto& [site, axis] : p.factors) {
    if (site < 1 || site > p.n_sites)
      throw InvalidSite("site " + std::to_string(site) + " outside [1, " +
                        std::to_string(p.n_sites) + "]");
    if (axis != Axis::Z) flip |= site_mask(p.n_sites, site);
  }
  const int dim = dimension(p.n_sites);
  Operator out = Operator::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    Complex amp = p.coefficient;
    for (const auto& [site, axis] : p.factors) {
      const bool bit = col & site_mask(p.n_sites, site);
      if (axis == Axis::Y) amp *= bit ? Complex(0, -1) : Complex(0, 1);
      if (axis == Axis::Z && bit) amp = -amp;
    }
    out(col ^ flip, col) = amp;
  }
  return out;
}

inline Operator sum_operators(const std::vector<Operator>& terms) {
  if (terms.empty()) throw ShapeError("sum of zero operators has no dimension");
  Operator out = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) {
    if (terms[k].rows() != out.rows() || terms[k].cols() != out.cols())
      throw ShapeError("operator dimension mismatch in sum");
    out += terms[k];
  }
  return out;
}

// |0>_a is the +1 eigenvector of sigma_a, |1>_a the -1 eigenvector.
// The z eigenvectors are the computational basis; the y eigenvectors are
// (1, +-i)/sqrt(2).  The global phase is fixed so the first nonzero
// amplitude is real positive.
inline State basis_product_state(int n_sites, const std::vector<int>& labels, Axis basis) {
  if (static_cast<int>(labels.size()) != n_sites)
    throw ShapeError("labels length " + std::to_string(labels.size()) +
                     " != n_sites " + std::to_string(n_sites));
  if (basis != Axis::Y && basis != Axis::Z)
    throw ShapeError("product states are supported in the y and z bases");
  const int dim = dimension(n_sites);
  State psi(dim);
  const double root = 1.0 / std::sqrt(2.0);
  for (int b = 0; b < dim; ++b) {
    Complex amp = 1.0;
    for (int site = 1; site <= n_sites; ++site) {
      const bool bit = b & site_mask(n_sites, site);
      const int label = labels[site - 1];
      if (basis == Axis::Z) {
        if (static_cast<int>(bit) != label) { amp = 0.0; break; }
      } else {
        // (1, i)/sqrt2 for |0>_y, (1, -i)/sqrt2 for |1>_y
        amp *= bit ? (label ? Complex(0, -root) : Complex(0, root)) : Complex(root, 0);
      }
    }
    psi(b) = amp;
  }
  for (int b = 0; b < dim; ++b) {
    if (std::abs(psi(b)) > 1e-14) {
      psi *= std::conj(psi(b)) / std::abs(psi(b));
      break;
    }
  }
  return psi;
}

inline Density projector(const State& psi) { return psi * psi.adjoint(); }

// 4x4 reduced density matrix over the ordered pair (site_a, site_b); the
// first output qubit is site_a.
inline Density partial_trace_to_pair(const Density& rho, int site_a, int site_b) {
  const int n = n_sites_of_dim(rho.rows());
  if (rho.rows() != rho.cols()) throw ShapeError("density matrix must be square");
  if (site_a == site_b) throw InvalidSite("pair sites must be distinct");
  for (int s : {site_a, site_b})
    if (s < 1 || s > n) throw InvalidSite("site " + std::to_string(s) + " out of range");

  const unsigned mask_a = site_mask(n, site_a);
  const unsigned mask_b = site_mask(n, site_b);
  // enumerate the traced-out sites once
  std::vector<unsigned> rest_masks;
  for (int s = 1; s <= n; ++s)
    if (s != site_a && s != site_b) rest_masks.push_back(site_mask(n, s));
  const int n_rest = static_cast<int>(rest_masks.size());

  Density out = Density::Zero(4, 4);
  for (int rest = 0; rest < (1 << n_rest); ++rest) {
    unsigned base = 0;
    for (int k = 0; k < n_rest; ++k)
      if (rest & (1 << k)) base |= rest_masks[k];
    for (int r = 0; r < 4; ++r) {
      const unsigned row = base | ((r & 2) ? mask_a : 0u) | ((r & 1) ? mask_b : 0u);
      for (int c = 0; c < 4; ++c) {
        const unsigned col = base | ((c & 2) ? mask_a : 0u) | ((c & 1) ? mask_b : 0u);
        out(r, c) += rho(row, col);
      }
    }
  }
  return out;
}

// pure-state fast path; agrees with the density-matrix route
inline Density partial_trace_to_pair(const State& psi, int site_a, int site_b) {
  const int n = n_sites_of_dim(psi.size());
  if (site_a == site_b) throw InvalidSite("pair sites must be distinct");
  for (int s : {site_a, site_b})
    if (s < 1 || s > n) throw InvalidSite("site " + std::to_string(s) + " out of range");

  const unsigned mask_a = site_mask(n, site_a);
  const unsigned mask_b = site_mask(n, site_b);
  std::vector<unsigned> rest_masks;
  for (int s = 1; s <= n; ++s)
    if (s != site_a && s != site_b) rest_masks.push_back(site_mask(n, s));
  const int n_rest = static_cast<int>(rest_masks.size());

  Density out = Density::Zero(4, 4);
  for (int rest = 0; rest < (1 << n_rest); ++rest) {
    unsigned base = 0;
    for (int k = 0; k < n_rest; ++k)
      if (rest & (1 << k)) base |= rest_masks[k];
    Eigen::Vector4cd slice;
    for (int r = 0; r < 4; ++r)
      slice(r) = psi(base | ((r & 2) ? mask_a : 0u) | ((r & 1) ? mask_b : 0u));
    out += slice * slice.adjoint();
  }
  return out;
}

// w = (sum_i sigma_axis^i) v, without forming the dense operator
inline State apply_site_sum(Axis axis, const State& v) {
  const int n = n_sites_of_dim(v.size());
  const int dim = static_cast<int>(v.size());
  State w = State::Zero(dim);
  if (axis == Axis::Z) {
    for (int b = 0; b < dim; ++b)
      w(b) = static_cast<double>(n - 2 * __builtin_popcount(static_cast<unsigned>(b))) * v(b);
    return w;
  }
  for (int site = 1; site <= n; ++site) {
    const unsigned mask = site_mask(n, site);
    if (axis == Axis::X) {
      for (int b = 0; b < dim; ++b) w(b) += v(b ^ mask);
    } else {
      for (int b = 0; b < dim; ++b)
        w(b) += (b & mask) ? Complex(0, 1) * v(b ^ mask) : Complex(0, -1) * v(b ^ mask);
    }
  }
  return w;
}

// w += coeff * sigma_axis^site v
inline void accumulate_single_pauli(Axis axis, int site, double coeff, const State& v,
                                    State& w) {
  const int n = n_sites_of_dim(v.size());
  const int dim = static_cast<int>(v.size());
  const unsigned mask = site_mask(n, site);
  switch (axis) {
    case Axis::X:
      for (int b = 0; b < dim; ++b) w(b) += coeff * v(b ^ mask);
      break;
    case Axis::Y:
      for (int b = 0; b < dim; ++b)
        w(b) += (b & mask) ? Complex(0, coeff) * v(b ^ mask)
                           : Complex(0, -coeff) * v(b ^ mask);
      break;
    case Axis::Z:
      for (int b = 0; b < dim; ++b) w(b) += (b & mask) ? -coeff * v(b) : coeff * v(b);
      break;
  }
}

inline double max_abs(const Operator& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline bool is_hermitian(const Operator& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

inline double operator_norm(const Operator& m) {
  if (is_hermitian(m, 1e-12 * std::max(1.0, max_abs(m)))) {
    Eigen::SelfAdjointEigenSolver<Operator> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return m.jacobiSvd().singularValues()(0);
}

// density-matrix invariants: Hermitian, unit trace, PSD up to `tol`
inline void validate_density(const Density& rho, double tol = 1e-10) {
  if (rho.rows() != rho.cols()) throw ShapeError("density matrix must be square");
  if (!is_hermitian(rho, tol)) throw NumericalError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > tol)
    throw NumericalError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Density> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol)
    throw NumericalError("density matrix has a negative eigenvalue beyond tolerance");
}

}  // namespace spinchain
