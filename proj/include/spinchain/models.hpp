#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "operators.hpp"

namespace spinchain {

enum class Family { Ising, XY, XYGamma, IsingNNN };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::Ising: return "ising";
    case Family::XY: return "xy";
    case Family::XYGamma: return "xy_gamma";
    default: return "ising_nnn";
  }
}

// Per-bond coupling profile.  `pst` expands to J_i = sqrt(i(N-i)), the
// profile that makes the single-excitation spectrum equally spaced.
struct CouplingProfile {
  enum class Kind { Uniform, Pst, Explicit };
  Kind kind = Kind::Uniform;
  double value = 1.0;
  std::vector<double> values;

  static CouplingProfile uniform(double v) { return {Kind::Uniform, v, {}}; }
  static CouplingProfile pst() { return {Kind::Pst, 0.0, {}}; }
  static CouplingProfile explicit_values(std::vector<double> v) {
    return {Kind::Explicit, 0.0, std::move(v)};
  }

  std::vector<double> expand(int n_sites, int n_bonds) const {
    std::vector<double> out(n_bonds);
    switch (kind) {
      case Kind::Uniform:
        std::fill(out.begin(), out.end(), value);
        break;
      case Kind::Pst:
        for (int i = 1; i <= n_bonds; ++i)
          out[i - 1] = std::sqrt(static_cast<double>(i) * (n_sites - i));
        break;
      case Kind::Explicit:
        if (static_cast<int>(values.size()) != n_bonds)
          throw ModelError("explicit coupling list has " +
                           std::to_string(values.size()) + " entries, expected " +
                           std::to_string(n_bonds));
        out = values;
        break;
    }
    return out;
  }
};

// jx holds J_i for the single-coupling families (Ising, XY-gamma, Ising-NNN);
// jy is meaningful only for family XY; l_nnn only for Ising-NNN.
struct ChainModel {
  int n_sites = 0;
  Family family = Family::Ising;
  std::vector<double> jx;
  std::vector<double> jy;
  double gamma = 0.0;
  std::vector<double> l_nnn;
};

inline void validate_model(const ChainModel& m) {
  if (m.n_sites < 2) throw ModelError("chain needs at least two sites");
  const auto bonds = static_cast<std::size_t>(m.n_sites - 1);
  if (m.jx.size() != bonds)
    throw ModelError("jx has " + std::to_string(m.jx.size()) + " bonds, expected " +
                     std::to_string(bonds));
  if (m.family == Family::XY && m.jy.size() != bonds)
    throw ModelError("jy has " + std::to_string(m.jy.size()) + " bonds, expected " +
                     std::to_string(bonds));
  if (m.family == Family::IsingNNN &&
      m.l_nnn.size() != static_cast<std::size_t>(m.n_sites - 2))
    throw ModelError("l_nnn has " + std::to_string(m.l_nnn.size()) +
                     " bonds, expected " + std::to_string(m.n_sites - 2));
}

struct DriveSpec {
  Axis axis = Axis::Z;
  double g = 0.0;
  double omega = 1.0;
};

inline double max_coupling(const ChainModel& m) {
  double mx = 0.0;
  auto scan = [&mx](const std::vector<double>& v, double scale) {
    for (double x : v) mx = std::max(mx, std::abs(scale * x));
  };
  scan(m.jx, 1.0);
  scan(m.jy, 1.0);
  if (m.family == Family::XYGamma) {
    scan(m.jx, m.gamma + 1.0);
    scan(m.jx, 1.0 - m.gamma);
  }
  if (m.family == Family::IsingNNN && m.n_sites > 0)
    scan(m.l_nnn, 1.0 / m.n_sites);
  return mx;
}

// The rotating-frame truncation needs omega well above every coupling; below
// this margin results are still produced, just flagged.
inline bool is_high_frequency(const ChainModel& m, const DriveSpec& d) {
  return d.omega >= 20.0 * max_coupling(m);
}

namespace detail {

inline void add_bond(std::vector<Operator>& terms, int n, int i, int j, Axis a,
                     double coeff) {
  if (coeff == 0.0) return;
  terms.push_back(build_pauli_operator({n, {{i, a}, {j, a}}, coeff}));
}

inline Operator dense_site_sum(int n, Axis axis) {
  std::vector<Operator> terms;
  for (int i = 1; i <= n; ++i) terms.push_back(build_pauli_operator({n, {{i, axis}}, 1.0}));
  return sum_operators(terms);
}

}  // namespace detail

inline Operator build_static_hamiltonian(const ChainModel& m) {
  validate_model(m);
  const int n = m.n_sites;
  std::vector<Operator> terms;
  terms.push_back(Operator::Zero(dimension(n), dimension(n)));
  switch (m.family) {
    case Family::Ising:
      for (int i = 1; i < n; ++i) detail::add_bond(terms, n, i, i + 1, Axis::X, m.jx[i - 1]);
      break;
    case Family::XY:
      for (int i = 1; i < n; ++i) {
        detail::add_bond(terms, n, i, i + 1, Axis::X, m.jx[i - 1]);
        detail::add_bond(terms, n, i, i + 1, Axis::Y, m.jy[i - 1]);
      }
      break;
    case Family::XYGamma:
      for (int i = 1; i < n; ++i) {
        detail::add_bond(terms, n, i, i + 1, Axis::X, m.jx[i - 1] * (m.gamma + 1.0));
        detail::add_bond(terms, n, i, i + 1, Axis::Y, m.jx[i - 1] * (1.0 - m.gamma));
      }
      break;
    case Family::IsingNNN:
      for (int i = 1; i < n; ++i) detail::add_bond(terms, n, i, i + 1, Axis::X, m.jx[i - 1]);
      // next-nearest bonds carry the 1/N normalization
      for (int i = 1; i < n - 1; ++i)
        detail::add_bond(terms, n, i, i + 2, Axis::X, m.l_nnn[i - 1] / n);
      break;
  }
  return sum_operators(terms);
}

inline double drive_value(const DriveSpec& d, double t) {
  return d.g * std::cos(d.omega * t);
}

// integral of the drive from 0 to t: g sin(omega t)/omega
inline double drive_integral(const DriveSpec& d, double t) {
  return d.g * std::sin(d.omega * t) / d.omega;
}

inline Operator driven_hamiltonian(const ChainModel& m, const DriveSpec& d, double t) {
  return build_static_hamiltonian(m) +
         drive_value(d, t) * detail::dense_site_sum(m.n_sites, d.axis);
}

// Zeroth Bessel function of the first kind.  Power series below 8; Miller's
// downward recurrence, normalized by J0 + 2*sum J_{2k} = 1, up to |x| = 50.
inline double bessel_j0(double x) {
  x = std::abs(x);
  if (x < 8.0) {
    const double q = -0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum) + 1e-300) break;
    }
    return sum;
  }
  if (x > 50.0) throw NumericalError("bessel_j0 argument beyond supported range");
  int m = static_cast<int>(x + 20.0 * std::sqrt(x) + 24.0);
  if (m % 2) ++m;
  double jp = 0.0, jc = 1e-30, norm = 0.0, j0 = 0.0;
  for (int k = m; k > 0; --k) {
    const double jm = (2.0 * k / x) * jc - jp;
    jp = jc;
    jc = jm;
    if (k % 2 == 0) norm += 2.0 * jp;  // jp holds J_k(x); even orders enter the sum rule
    if (std::abs(jc) > 1e250) {        // rescale to avoid overflow
      jc *= 1e-250;
      jp *= 1e-250;
      norm *= 1e-250;
    }
  }
  j0 = jc;
  norm += j0;
  return j0 / norm;
}

namespace detail {
// location of the first minimum of J0 (first zero of J1); end of the
// monotone branch used for calibration
inline constexpr double j0_first_min_x = 3.8317059702075123;
}  // namespace detail

// Smallest g >= 0 with J0(4g/omega) = target_A, taken on the branch where
// J0 falls monotonically from 1 to its global minimum.
inline double calibrate_drive(double target_A, double omega) {
  if (omega <= 0.0) throw CalibrationError("omega must be positive");
  const double floor_A = bessel_j0(detail::j0_first_min_x);
  if (target_A > 1.0 + 1e-12 || target_A < floor_A - 1e-12)
    throw CalibrationError("target weight " + std::to_string(target_A) +
                           " outside reachable range [" + std::to_string(floor_A) +
                           ", 1]");
  if (target_A >= 1.0) return 0.0;
  double lo = 0.0, hi = detail::j0_first_min_x;
  if (target_A <= floor_A) return omega * hi / 4.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bessel_j0(mid) > target_A ? lo : hi) = mid;
  }
  return omega * 0.5 * (lo + hi) / 4.0;
}

// exp(-i g sin(omega t)/omega * sum_i sigma_axis^i), assembled as a tensor
// power of the single-site rotation
inline Operator control_frame_unitary(const DriveSpec& d, int n_sites, double t) {
  const double theta = drive_integral(d, t);
  Operator u1 = std::cos(theta) * Operator::Identity(2, 2) -
                Complex(0, std::sin(theta)) * pauli_matrix(d.axis).cast<Complex>();
  Operator u = Operator::Identity(1, 1);
  for (int i = 0; i < n_sites; ++i) u = kronecker(u, u1);
  return u;
}

// Zeroth-order rotating-frame chain for every (family, drive axis) pair with
// a known closed form; A = J0(4g/omega).
inline Operator effective_hamiltonian(const ChainModel& m, const DriveSpec& d) {
  validate_model(m);
  const double A = bessel_j0(4.0 * d.g / d.omega);
  const int n = m.n_sites;
  std::vector<Operator> terms;
  terms.push_back(Operator::Zero(dimension(n), dimension(n)));

  if (m.family == Family::Ising && d.axis == Axis::Z) {
    for (int i = 1; i < n; ++i) {
      const double j = m.jx[i - 1] / 2.0;
      detail::add_bond(terms, n, i, i + 1, Axis::X, j * (A + 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Y, -j * (A - 1.0));
    }
    return sum_operators(terms);
  }
  if (m.family == Family::XY && d.axis == Axis::Z) {
    for (int i = 1; i < n; ++i) {
      const double jx = m.jx[i - 1], jy = m.jy[i - 1];
      detail::add_bond(terms, n, i, i + 1, Axis::X,
                       0.5 * (jx * (A + 1.0) - jy * (A - 1.0)));
      detail::add_bond(terms, n, i, i + 1, Axis::Y,
                       0.5 * (jy * (A + 1.0) - jx * (A - 1.0)));
    }
    return sum_operators(terms);
  }
  if (m.family == Family::XY && d.axis == Axis::Y) {
    for (int i = 1; i < n; ++i) {
      const double jx = m.jx[i - 1], jy = m.jy[i - 1];
      detail::add_bond(terms, n, i, i + 1, Axis::X, 0.5 * jx * (A + 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Z, -0.5 * jx * (A - 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Y, jy);
    }
    return sum_operators(terms);
  }
  if (m.family == Family::XYGamma && d.axis == Axis::Y) {
    for (int i = 1; i < n; ++i) {
      const double j = m.jx[i - 1] / 2.0;
      detail::add_bond(terms, n, i, i + 1, Axis::X, j * (m.gamma + 1.0) * (A + 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Z, -j * (m.gamma + 1.0) * (A - 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Y, 2.0 * j * (1.0 - m.gamma));
    }
    return sum_operators(terms);
  }
  if (m.family == Family::IsingNNN && d.axis == Axis::Z) {
    for (int i = 1; i < n; ++i) {
      const double j = m.jx[i - 1] / 2.0;
      detail::add_bond(terms, n, i, i + 1, Axis::X, j * (A + 1.0));
      detail::add_bond(terms, n, i, i + 1, Axis::Y, -j * (A - 1.0));
    }
    for (int i = 1; i < n - 1; ++i) {
      const double l = m.l_nnn[i - 1] / (2.0 * n);
      detail::add_bond(terms, n, i, i + 2, Axis::X, l * (A + 1.0));
      detail::add_bond(terms, n, i, i + 2, Axis::Y, -l * (A - 1.0));
    }
    return sum_operators(terms);
  }
  throw UnsupportedTransform("no effective chain for family '" + family_name(m.family) +
                             "' with drive axis '" + axis_name(d.axis) + "'");
}

}  // namespace spinchain
