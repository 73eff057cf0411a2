#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "spinchain/operators.hpp"

using namespace spinchain;

namespace {

State random_state(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  State psi(dim);
  for (int i = 0; i < dim; ++i) psi(i) = Complex(gauss(rng), gauss(rng));
  psi.normalize();
  return psi;
}

// random convex mixture of projectors: a valid density matrix by construction
Density random_density(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Density rho = Density::Zero(dim, dim);
  double total = 0;
  for (int k = 0; k < 3; ++k) {
    const double w = unif(rng);
    rho += w * projector(random_state(dim, seed + 17 * k + 1));
    total += w;
  }
  return rho / total;
}

}  // namespace

TEST_CASE("single-site pauli matrices") {
  const Operator z = build_pauli_operator({1, {{1, Axis::Z}}, 1.0});
  CHECK(max_abs(z - pauli_matrix(Axis::Z).cast<Complex>()) == 0.0);
  CHECK(z(0, 0) == Complex(1.0));
  CHECK(z(1, 1) == Complex(-1.0));

  const Operator y = build_pauli_operator({1, {{1, Axis::Y}}, 1.0});
  CHECK(y(0, 1) == Complex(0, -1));
  CHECK(y(1, 0) == Complex(0, 1));
}

TEST_CASE("two-site tensor products") {
  const Operator xx = build_pauli_operator({2, {{1, Axis::X}, {2, Axis::X}}, 1.0});
  Operator anti = Operator::Zero(4, 4);
  anti(0, 3) = anti(1, 2) = anti(2, 1) = anti(3, 0) = 1.0;
  CHECK(max_abs(xx - anti) == 0.0);
  CHECK(max_abs(xx - kronecker(pauli_matrix(Axis::X), pauli_matrix(Axis::X))) == 0.0);

  const Operator two_id = build_pauli_operator({2, {}, 2.0});
  CHECK(max_abs(two_id - 2.0 * Operator::Identity(4, 4)) == 0.0);

  // site 1 is the most significant factor: Z1 = Z (x) I, Z2 = I (x) Z
  const Operator z1 = build_pauli_operator({2, {{1, Axis::Z}}, 1.0});
  const Operator z2 = build_pauli_operator({2, {{2, Axis::Z}}, 1.0});
  CHECK(max_abs(z1 - kronecker(pauli_matrix(Axis::Z), Operator::Identity(2, 2))) == 0.0);
  CHECK(max_abs(z2 - kronecker(Operator::Identity(2, 2), pauli_matrix(Axis::Z))) == 0.0);
}

TEST_CASE("pauli strings square to identity") {
  const std::vector<PauliString> strings = {
      {3, {{1, Axis::X}}, 1.0},
      {3, {{2, Axis::Y}}, 1.0},
      {3, {{3, Axis::Z}}, 1.0},
      {3, {{1, Axis::X}, {2, Axis::X}}, 1.0},
      {3, {{1, Axis::Y}, {3, Axis::Y}}, 1.0},
      {4, {{1, Axis::X}, {2, Axis::Y}, {3, Axis::Z}, {4, Axis::Y}}, 1.0},
  };
  for (const auto& p : strings) {
    const Operator m = build_pauli_operator(p);
    const int dim = dimension(p.n_sites);
    CHECK(max_abs(m * m - Operator::Identity(dim, dim)) < 1e-15);
    CHECK(is_hermitian(m, 1e-12));
  }
}

TEST_CASE("site index validation") {
  CHECK_THROWS_AS(build_pauli_operator({2, {{0, Axis::X}}, 1.0}), InvalidSite);
  CHECK_THROWS_AS(build_pauli_operator({2, {{3, Axis::Z}}, 1.0}), InvalidSite);
  CHECK_THROWS_AS(build_pauli_operator({0, {}, 1.0}), InvalidSite);
}

TEST_CASE("operator sums") {
  const Operator z1 = build_pauli_operator({1, {{1, Axis::Z}}, 1.0});
  CHECK(max_abs(sum_operators({z1, -z1})) == 0.0);

  const Operator x1 = build_pauli_operator({2, {{1, Axis::X}}, 1.0});
  const Operator x2 = build_pauli_operator({2, {{2, Axis::X}}, 1.0});
  const Operator s = sum_operators({x1, x2});
  for (auto [r, c] : {std::pair{0, 1}, {1, 0}, {0, 2}, {2, 0},
                      {1, 3}, {3, 1}, {2, 3}, {3, 2}})
    CHECK(s(r, c) == Complex(1.0));
  CHECK(s.cwiseAbs().sum() == 8.0);

  CHECK(max_abs(sum_operators({x1}) - x1) == 0.0);
  CHECK_THROWS_AS(sum_operators({x1, z1}), ShapeError);
  CHECK_THROWS_AS(sum_operators({}), ShapeError);
}

TEST_CASE("computational basis product states") {
  const State s01 = basis_product_state(2, {0, 1}, Axis::Z);
  State want = State::Zero(4);
  want(1) = 1.0;
  CHECK(max_abs(s01 - want) == 0.0);

  const State s011 = basis_product_state(3, {0, 1, 1}, Axis::Z);
  CHECK(s011(3) == Complex(1.0));
  CHECK(s011.norm() == 1.0);
}

TEST_CASE("y-basis product states") {
  const State y0 = basis_product_state(1, {0}, Axis::Y);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(y0(0) - Complex(r, 0)) < 1e-15);
  CHECK(std::abs(y0(1) - Complex(0, r)) < 1e-15);

  // each site label is a +-1 eigenvector of sigma_y at that site
  const std::vector<int> labels = {0, 1, 1};
  const State psi = basis_product_state(3, labels, Axis::Y);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
  for (int site = 1; site <= 3; ++site) {
    const Operator ys = build_pauli_operator({3, {{site, Axis::Y}}, 1.0});
    const double sign = labels[site - 1] == 0 ? 1.0 : -1.0;
    CHECK(max_abs(ys * psi - sign * psi) < 1e-12);
  }

  // deterministic global phase: first nonzero amplitude real positive
  CHECK(psi(0).imag() == 0.0);
  CHECK(psi(0).real() > 0.0);

  CHECK_THROWS_AS(basis_product_state(2, {0}, Axis::Z), ShapeError);
  CHECK_THROWS_AS(basis_product_state(1, {0}, Axis::X), ShapeError);
}

TEST_CASE("bit ordering round trip") {
  // flipping site i with X_i moves between the matching z-basis labels
  const std::vector<int> labels = {0, 1, 0, 1};
  const State psi = basis_product_state(4, labels, Axis::Z);
  for (int site = 1; site <= 4; ++site) {
    const Operator xs = build_pauli_operator({4, {{site, Axis::X}}, 1.0});
    auto flipped = labels;
    flipped[site - 1] ^= 1;
    CHECK(max_abs(xs * psi - basis_product_state(4, flipped, Axis::Z)) == 0.0);

    const Operator zs = build_pauli_operator({4, {{site, Axis::Z}}, 1.0});
    const double sign = labels[site - 1] == 0 ? 1.0 : -1.0;
    CHECK(max_abs(zs * psi - sign * psi) == 0.0);
  }
}

TEST_CASE("partial trace of product and entangled states") {
  const Density rho000 = projector(basis_product_state(3, {0, 0, 0}, Axis::Z));
  const Density r13 = partial_trace_to_pair(rho000, 1, 3);
  Density want = Density::Zero(4, 4);
  want(0, 0) = 1.0;
  CHECK(max_abs(r13 - want) < 1e-15);

  State bell(4);
  bell << 0, 1, 1, 0;
  bell /= std::sqrt(2.0);
  const Density rb = partial_trace_to_pair(projector(bell), 1, 2);
  CHECK(max_abs(rb - projector(bell)) < 1e-15);

  State ghz(8);
  ghz.setZero();
  ghz(0) = ghz(7) = 1.0 / std::sqrt(2.0);
  const Density rg = partial_trace_to_pair(projector(ghz), 1, 2);
  Density half = Density::Zero(4, 4);
  half(0, 0) = half(3, 3) = 0.5;
  CHECK(max_abs(rg - half) < 1e-15);
}

TEST_CASE("partial trace pair ordering") {
  // |011>: site 1 = 0, sites 2,3 = 1
  const State psi = basis_product_state(3, {0, 1, 1}, Axis::Z);
  const Density r23 = partial_trace_to_pair(projector(psi), 2, 3);
  CHECK(std::abs(r23(3, 3) - Complex(1.0)) < 1e-15);
  const Density r31 = partial_trace_to_pair(projector(psi), 3, 1);
  // first kept qubit is site 3 (label 1), second site 1 (label 0) -> index 10b
  CHECK(std::abs(r31(2, 2) - Complex(1.0)) < 1e-15);
}

TEST_CASE("partial trace invariants") {
  const Density rho = random_density(32, 42);
  const Density red = partial_trace_to_pair(rho, 2, 5);
  CHECK(std::abs(red.trace() - Complex(1.0)) < 1e-12);
  CHECK(is_hermitian(red, 1e-12));
  Eigen::SelfAdjointEigenSolver<Density> es(red, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);

  // pure-state fast path agrees with the density-matrix route
  const State psi = random_state(32, 7);
  CHECK(max_abs(partial_trace_to_pair(psi, 2, 5) -
                partial_trace_to_pair(projector(psi), 2, 5)) < 1e-13);

  // product states reduce to pure states
  const State prod = basis_product_state(5, {1, 0, 1, 1, 0}, Axis::Y);
  const Density rp = partial_trace_to_pair(prod, 1, 4);
  CHECK(std::abs((rp * rp).trace() - Complex(1.0)) < 1e-12);

  CHECK_THROWS_AS(partial_trace_to_pair(rho, 3, 3), InvalidSite);
  CHECK_THROWS_AS(partial_trace_to_pair(rho, 0, 2), InvalidSite);
  CHECK_THROWS_AS(partial_trace_to_pair(rho, 1, 6), InvalidSite);
}

TEST_CASE("site sums without dense operators") {
  const int n = 4;
  const State psi = random_state(dimension(n), 11);
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    std::vector<Operator> terms;
    for (int site = 1; site <= n; ++site)
      terms.push_back(build_pauli_operator({n, {{site, axis}}, 1.0}));
    const Operator dense = sum_operators(terms);
    CHECK(max_abs(apply_site_sum(axis, psi) - dense * psi) < 1e-13);
  }
}

TEST_CASE("single-site accumulation matches dense") {
  const int n = 3;
  const State psi = random_state(dimension(n), 23);
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    for (int site = 1; site <= n; ++site) {
      State acc = State::Zero(psi.size());
      accumulate_single_pauli(axis, site, 0.7, psi, acc);
      const Operator dense = build_pauli_operator({n, {{site, axis}}, 0.7});
      CHECK(max_abs(acc - dense * psi) < 1e-13);
    }
  }
}

TEST_CASE("density matrix validation") {
  CHECK_NOTHROW(validate_density(random_density(8, 3)));
  CHECK_NOTHROW(validate_density(Density::Identity(4, 4) / 4.0));

  Density off_trace = Density::Identity(4, 4) / 2.0;
  CHECK_THROWS_AS(validate_density(off_trace), NumericalError);

  Density neg = Density::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(validate_density(neg), NumericalError);

  Density skew = Density::Identity(2, 2) / 2.0;
  skew(0, 1) = Complex(0, 0.3);
  CHECK_THROWS_AS(validate_density(skew), NumericalError);
}

TEST_CASE("operator norms") {
  const Operator xy =
      build_pauli_operator({3, {{1, Axis::X}, {2, Axis::Y}}, Complex(0, 2.0)});
  CHECK(std::abs(operator_norm(xy) - 2.0) < 1e-12);
  CHECK(std::abs(operator_norm(Operator::Identity(4, 4)) - 1.0) < 1e-13);
}

TEST_CASE("dimension helpers") {
  CHECK(dimension(3) == 8);
  CHECK(n_sites_of_dim(16) == 4);
  CHECK_THROWS_AS(n_sites_of_dim(12), ShapeError);
}
