#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "sorsp/states.hpp"
#include "sorsp/tomography.hpp"

using namespace sorsp;

TEST_CASE("setting catalog") {
  const auto& cat = setting_catalog();
  REQUIRE(cat.size() == 36);
  CHECK(design_rank(cat) == 16);
  CHECK(design_rank(polarization_catalog()) == 4);
  CHECK(setting_by_label("Hl").projector.matrix()(0, 0) == cplx(1.0));
  CHECK(polarization_catalog()[0].label() == "H");
  CHECK_THROWS_AS(setting_by_label("Xq"), std::invalid_argument);

  // Spatial diagonal modes mirror D, A, R, L under l <-> H, r <-> V.
  CHECK((spatial_ket('d') - oracle::vec({oracle::kS, oracle::kI * oracle::kS})).norm() < 1e-15);
  CHECK((spatial_ket('a') - oracle::vec({oracle::kS, -oracle::kI * oracle::kS})).norm() < 1e-15);
  CHECK((spatial_ket('v') - oracle::vec({oracle::kI * oracle::kS, -oracle::kI * oracle::kS})).norm() < 1e-15);
  CHECK((polarization_ket('R') - oracle::vec({oracle::kS, oracle::kI * oracle::kS})).norm() < 1e-15);

  // Only the four H/V x l/r settings: not informationally complete.
  std::vector<Setting> partial;
  for (const char* l : {"Hl", "Hr", "Vl", "Vr"}) partial.push_back(setting_by_label(l));
  CHECK(design_rank(partial) == 4);
  const auto rec = noiseless_counts(DensityMatrix::maximally_mixed(4), partial, 100.0);
  CHECK_THROWS_AS(linear_reconstruct(rec), std::invalid_argument);
}

TEST_CASE("count records") {
  const auto& cat = setting_catalog();
  const DensityMatrix rho = DensityMatrix::from_ket(oracle::phi_plus());
  const auto exp = expected_counts(rho, cat, 1000.0);
  CHECK(exp[0] == doctest::Approx(500.0));  // Hl
  const auto rec = simulate_counts(rho, cat, 500.0, 2.0, 3);
  CHECK(rec.mean_total() == doctest::Approx(1000.0));
  for (double c : rec.counts) CHECK(c == std::floor(c));
  CHECK(simulate_counts(rho, cat, 500.0, 2.0, 3).counts == rec.counts);
  CHECK(simulate_counts(rho, cat, 500.0, 2.0, 4).counts != rec.counts);

  CountRecord bad = rec;
  bad.counts.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = rec;
  bad.counts[0] = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // A noise channel applies before sampling.
  const NoiseChannel full = [](const DensityMatrix& r) { return depolarizing(r, 1.0); };
  const auto noisy = simulate_counts(rho, cat, 1e6, 1.0, 5, full);
  CHECK(noisy.counts[0] == doctest::Approx(0.25e6).epsilon(0.01));
}

TEST_CASE("linear inversion recovers the state exactly from expectations") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const CMatrix r = oracle::random_density(4, rng);
    const auto rec = noiseless_counts(DensityMatrix(r), setting_catalog(), 1000.0);
    const auto est = linear_reconstruct(rec);
    CHECK((est.rho - r).norm() < 1e-10);
    CHECK(!est.negative_eigenvalue);
  }
  const CMatrix q = oracle::random_density(2, rng);
  CHECK((linear_reconstruct(noiseless_counts(DensityMatrix(q), polarization_catalog(), 10.0)).rho - q).norm() < 1e-12);
}

TEST_CASE("projection to physical") {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = 1.1;
  h(1, 1) = -0.1;
  const auto p = project_to_physical(h);
  CHECK(p.matrix()(0, 0).real() == doctest::Approx(1.0));
  CHECK(std::abs(p.matrix()(1, 1)) < 1e-15);
}

TEST_CASE("cholesky parametrization round trip") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const CMatrix r = oracle::random_density(4, rng);
    const Eigen::VectorXd th = cholesky_parameters(DensityMatrix(r));
    CHECK(th.size() == 16);
    CHECK(th.norm() == doctest::Approx(1.0));
    CHECK((from_cholesky_parameters(th, 4).matrix() - r).norm() < 1e-10);
    CHECK((from_cholesky_parameters(3.0 * th, 4).matrix() - r).norm() < 1e-10);
  }
}

TEST_CASE("maximum likelihood reconstruction") {
  std::mt19937_64 rng(29);
  SUBCASE("mixed states from large samples") {
    for (int t = 0; t < 5; ++t) {
      const CMatrix r = oracle::random_density(4, rng);
      const auto rec = simulate_counts(DensityMatrix(r), setting_catalog(), 1e6, 1.0, static_cast<std::uint64_t>(t));
      const auto res = mle_reconstruct(rec);
      CHECK(res.converged);
      CHECK(fidelity(res.rho, DensityMatrix(r)) > 0.999);
      CHECK(std::is_sorted(res.history.begin(), res.history.end()));
      CHECK(res.log_likelihood >= log_likelihood(rec, project_to_physical(linear_reconstruct(rec).rho)) - 1e-6);
    }
  }
  SUBCASE("pure state") {
    const auto rec = simulate_counts(DensityMatrix::from_ket(oracle::psi_plus()), setting_catalog(), 2000.0, 1.0, 4);
    const auto res = mle_reconstruct(rec);
    CHECK(res.converged);
    CHECK(fidelity(res.rho, spin_orbit_bell(BellKind::psi_plus)) > 0.98);
    const auto eig = hermitian_eigenvalues(res.rho.matrix());
    CHECK(eig.minCoeff() >= -1e-12);
  }
  SUBCASE("noiseless counts give the state back") {
    const CMatrix r = oracle::random_density(4, rng);
    const auto res = mle_reconstruct(noiseless_counts(DensityMatrix(r), setting_catalog(), 1e4));
    CHECK(res.converged);
    CHECK((res.rho.matrix() - r).norm() < 1e-5);
  }
  SUBCASE("polarization-only data") {
    const CMatrix r = oracle::random_density(2, rng);
    const auto res = mle_reconstruct(simulate_counts(DensityMatrix(r), polarization_catalog(), 1e6, 1.0, 2));
    CHECK(oracle::qubit_fidelity(res.rho.matrix(), r) > 0.999);
  }
  SUBCASE("iteration cap reported") {
    const auto rec = simulate_counts(DensityMatrix::from_ket(oracle::psi_plus()), setting_catalog(), 500.0, 1.0, 6);
    MleOptions opt;
    opt.max_iterations = 1;
    opt.gradient_tolerance = 1e-300;
    const auto res = mle_reconstruct(rec, std::nullopt, opt);
    CHECK(!res.converged);
    CHECK(res.iterations == 1);
  }
  SUBCASE("zero counts rejected") {
    CountRecord rec = noiseless_counts(DensityMatrix::maximally_mixed(4), setting_catalog(), 1.0);
    std::fill(rec.counts.begin(), rec.counts.end(), 0.0);
    CHECK_THROWS_AS(mle_reconstruct(rec), std::invalid_argument);
  }
}

TEST_CASE("monte carlo error bars shrink as 1/sqrt(N)") {
  const DensityMatrix rho = depolarizing(DensityMatrix::from_ket(oracle::phi_plus()), 0.1);
  const Target target{spin_orbit_bell(BellKind::phi_plus)};
  const auto small = monte_carlo_errors(simulate_counts(rho, setting_catalog(), 1e4, 1.0, 1), target, 40, 2);
  const auto large = monte_carlo_errors(simulate_counts(rho, setting_catalog(), 1e6, 1.0, 1), target, 40, 2);
  CHECK(small.samples == 40);
  const double ratio = small.fidelity.stddev / large.fidelity.stddev;
  CHECK(ratio > 10.0 * 0.7);
  CHECK(ratio < 10.0 * 1.3);
  CHECK(large.fidelity.mean == doctest::Approx(0.925).epsilon(0.005));
  CHECK_THROWS_AS(monte_carlo_errors(simulate_counts(rho, setting_catalog(), 1e4, 1.0, 1), target, 1, 2),
                  std::invalid_argument);
}
