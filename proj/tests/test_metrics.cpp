#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sorsp/metrics.hpp"
#include "sorsp/states.hpp"
#include "sorsp/tomography.hpp"

using namespace sorsp;

namespace {

DensityMatrix werner(double v) {
  return DensityMatrix(v * oracle::proj(oracle::psi_plus()) + (1 - v) * CMatrix::Identity(4, 4) / 4.0);
}

}  // namespace

TEST_CASE("fidelity") {
  const PureState pp = spin_orbit_bell(BellKind::psi_plus);
  CHECK(fidelity(DensityMatrix::from_pure(pp), pp) == doctest::Approx(1.0));
  CHECK(fidelity(DensityMatrix::from_pure(spin_orbit_bell(BellKind::phi_plus)), pp) == doctest::Approx(0.0));
  CHECK(fidelity(DensityMatrix::maximally_mixed(4), pp) == doctest::Approx(0.25));

  // Pure target through both overloads agrees.
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const DensityMatrix rho(oracle::random_density(4, rng));
    const DensityMatrix target = DensityMatrix::from_pure(pp);
    CHECK(fidelity(rho, target) == doctest::Approx(fidelity(rho, pp)).epsilon(1e-8));
    CHECK(fidelity(rho, Target{pp}) == doctest::Approx(fidelity(rho, pp)));
  }
  // Qubit Uhlmann fidelity against the closed form, embedded on the polarization block.
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_density(2, rng), b = oracle::random_density(2, rng);
    const CMatrix e = CMatrix::Identity(2, 2) * 0.5;
    const double f = fidelity(DensityMatrix(kron(a, e)), DensityMatrix(kron(b, e)));
    CHECK(f == doctest::Approx(oracle::qubit_fidelity(a, b)).epsilon(1e-8));
  }
}

TEST_CASE("concurrence and tangle") {
  for (auto k : kBellKinds) CHECK(tangle(DensityMatrix::from_pure(spin_orbit_bell(k))) == doctest::Approx(1.0));
  CHECK(tangle(DensityMatrix::from_ket(oracle::single(0, 1))) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tangle(DensityMatrix::maximally_mixed(4)) == doctest::Approx(0.0));

  for (double v : {0.0, 0.2, 1.0 / 3, 0.5, 0.8, 0.94, 1.0})
    CHECK(tangle(werner(v)) == doctest::Approx(oracle::werner_tangle(v)).epsilon(1e-9));

  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const CMatrix r = oracle::random_density(4, rng);
    CHECK(concurrence(DensityMatrix(r)) == doctest::Approx(oracle::concurrence(r)).epsilon(1e-7));
  }
  // Invariant under local unitaries.
  for (int t = 0; t < 20; ++t) {
    const CMatrix r = oracle::random_density(4, rng);
    const CMatrix u = kron(oracle::random_unitary(2, rng), oracle::random_unitary(2, rng));
    CHECK(concurrence(DensityMatrix(CMatrix(u * r * u.adjoint()))) == doctest::Approx(concurrence(DensityMatrix(r))).epsilon(1e-8));
  }
  // Partially entangled pure state: C = 2|ad - bc|.
  const double c = std::cos(0.3), s = std::sin(0.3);
  CHECK(concurrence(DensityMatrix::from_ket(oracle::vec({c, 0, 0, s}))) == doctest::Approx(2 * c * s));
}

TEST_CASE("linear entropy and purity") {
  CHECK(linear_entropy(DensityMatrix::maximally_mixed(4)) == doctest::Approx(1.0));
  CHECK(linear_entropy(DensityMatrix::from_ket(oracle::phi_plus())) == doctest::Approx(0.0).epsilon(1e-12));
  CMatrix cc = CMatrix::Zero(4, 4);
  cc(1, 1) = cc(2, 2) = 0.5;
  CHECK(linear_entropy(DensityMatrix(cc)) == doctest::Approx(2.0 / 3));
  CHECK(purity(DensityMatrix(cc)) == doctest::Approx(0.5));
  const auto q = quality_report(werner(0.5), Target{spin_orbit_bell(BellKind::psi_plus)});
  CHECK(q.purity == doctest::Approx(1 - 0.75 * q.linear_entropy));
  CHECK(q.fidelity == doctest::Approx(0.5 + 0.5 / 4));
  CHECK_THROWS_AS(quality_report(DensityMatrix::maximally_mixed(2), Target{DensityMatrix::maximally_mixed(2)}),
                  std::invalid_argument);
}

TEST_CASE("depolarizing channel") {
  const DensityMatrix rho = DensityMatrix::from_ket(oracle::phi_plus());
  CHECK((depolarizing(rho, 1.0).matrix() - CMatrix::Identity(4, 4) / 4.0).norm() < 1e-15);
  CHECK(fidelity(depolarizing(rho, 0.2), spin_orbit_bell(BellKind::phi_plus)) == doctest::Approx(0.85));
  CHECK_THROWS_AS(depolarizing(rho, -0.1), std::invalid_argument);
}
