#include <doctest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sorsp/metrics.hpp"
#include "sorsp/protocol.hpp"

using namespace sorsp;

namespace {

constexpr double pi = std::numbers::pi;

Ket bob_ket(const ProtocolTranscript& t) { return std::get<PureState>(t.bob_state).amplitudes(); }

// Bob's conditional for Alice vector `a`, computed by explicit index sums.
Ket conditional(const Ket& joint, const Ket& a) {
  Ket b = Ket::Zero(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b[j] += std::conj(a[i]) * joint[4 * i + j];
  return b;
}

}  // namespace

TEST_CASE("canonical bsa pairs outcomes with bob's bell states") {
  const auto branches = bsa_project(hyperentangled_resource());
  REQUIRE(branches.size() == 4);
  const auto ref = oracle::bells();
  const std::array<int, 4> partner = {2, 3, 0, 1};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(branches[k].probability - 0.25) < 1e-12);
    CHECK(oracle::overlap(branches[k].bob->amplitudes(), ref[static_cast<std::size_t>(partner[k])]) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(branches[2].label == "psi+_A");
  CHECK_THROWS_AS(bsa_project(spin_orbit_bell(BellKind::phi_plus)), std::invalid_argument);

  // 45 degree rotated analyzer gives the canonical conditionals, relabeled.
  const auto rot = bsa_project(hyperentangled_resource(), RotatedAngles{pi / 4, pi / 4});
  for (const auto& b : rot) CHECK(std::abs(b.probability - 0.25) < 1e-12);
}

TEST_CASE("correction table for target psi+ follows the reference rules") {
  CHECK(correction_rule(BellKind::phi_plus, BellKind::psi_plus) == PauliCorrection::identity);
  CHECK(correction_rule(BellKind::phi_minus, BellKind::psi_plus) == PauliCorrection::flip_v);
  CHECK(correction_rule(BellKind::psi_plus, BellKind::psi_plus) == PauliCorrection::swap_hv);
  CHECK(correction_rule(BellKind::psi_minus, BellKind::psi_plus) == PauliCorrection::flip_then_swap);
  CHECK(to_string(PauliCorrection::flip_v) == "V->-V");
  CHECK(to_string(PauliCorrection::flip_then_swap) == "V->-V and H<->V");

  // The corrections act on polarization only.
  Eigen::Matrix2cd zo;
  zo << 1, 0, 0, -1;
  const CMatrix orbit_obs = kron(Eigen::Matrix2cd::Identity(), zo);
  for (auto c : {PauliCorrection::identity, PauliCorrection::flip_v, PauliCorrection::swap_hv, PauliCorrection::flip_then_swap}) {
    const CMatrix u = correction_unitary(c);
    CHECK((u * orbit_obs - orbit_obs * u).norm() < 1e-12);
    CHECK(unitarity_deviation(u) < 1e-12);
  }
}

TEST_CASE("apply_correction reaches every target from every outcome") {
  const auto ref = oracle::bells();
  const std::array<int, 4> partner = {2, 3, 0, 1};
  for (auto target : kBellKinds)
    for (auto outcome : kBellKinds) {
      const PureState bob(ref[static_cast<std::size_t>(partner[static_cast<std::size_t>(index_of(outcome))])], photon_labels());
      const auto res = apply_correction(outcome, target, bob);
      CHECK(oracle::overlap(res.state.amplitudes(), ref[static_cast<std::size_t>(index_of(target))]) ==
            doctest::Approx(1.0).epsilon(1e-10));
      CHECK(res.message_bits.size() == 2);
    }
  // Not a Bell state at all.
  CHECK_THROWS_AS(apply_correction(BellKind::phi_plus, BellKind::psi_plus, PureState(oracle::single(0, 0), photon_labels())),
                  std::invalid_argument);
  // A Bell state, but not the one this outcome heralds.
  CHECK_THROWS_AS(apply_correction(BellKind::phi_plus, BellKind::psi_plus, spin_orbit_bell(BellKind::phi_plus)),
                  std::invalid_argument);
}

TEST_CASE("run_resp") {
  std::array<int, 4> hist{};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto t = run_resp(BellKind::phi_plus, seed);
    ++hist[static_cast<std::size_t>(t.alice->outcome_index)];
    if (seed < 200) {
      CHECK(oracle::overlap(bob_ket(t), oracle::phi_plus()) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(t.cbits_sent == 2);
      CHECK(t.ebits_consumed == 2);
    }
  }
  const double sigma = std::sqrt(10000 * 0.25 * 0.75);
  for (int h : hist) CHECK(std::abs(h - 2500) < 5 * sigma);
  CHECK(run_resp(BellKind::psi_minus, 7).alice->outcome_index == run_resp(BellKind::psi_minus, 7).alice->outcome_index);
}

TEST_CASE("family protocol conditionals") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int trial = 0; trial < 30; ++trial) {
    const FamilyParams p{u(rng), u(rng), u(rng), u(rng), u(rng)};
    const oracle::Family f{p.alpha, p.beta, p.eta, p.theta, p.phi};
    // Alice's U on her polarization, built from its column images.
    const cplx ee = std::polar(1.0, p.eta), ep = std::polar(1.0, p.phi);
    Eigen::Matrix2cd uu;
    uu << std::cos(p.theta), ep * std::sin(p.theta), ee * std::sin(p.theta), -ep * ee * std::cos(p.theta);
    const CMatrix ua = kron(kron(uu, Eigen::Matrix2cd::Identity()), CMatrix::Identity(4, 4));
    const Ket joint = ua * oracle::resource();
    const auto basis = alice_bsa_basis(RotatedAngles{p.alpha, p.beta});
    const CMatrix frame = family_frame_unitary();
    std::vector<Ket> bobs;
    for (int b = 0; b < 4; ++b) {
      const Ket raw = conditional(joint, basis[static_cast<std::size_t>(b)]);
      CHECK(raw.squaredNorm() == doctest::Approx(0.25).epsilon(1e-10));
      const Ket framed = frame * raw / raw.norm();
      CHECK(oracle::overlap(framed, oracle::family(b, f)) == doctest::Approx(1.0).epsilon(1e-10));
      bobs.push_back(raw);
    }
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) CHECK(std::abs(bobs[static_cast<std::size_t>(a)].dot(bobs[static_cast<std::size_t>(b)])) < 1e-10);

    const auto t = run_family(p, static_cast<std::uint64_t>(trial));
    CHECK(oracle::overlap(bob_ket(t), oracle::family(t.alice->outcome_index, f)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(t.correction.kind == "frame");
  }

  // Alpha = 0: phi+_A(0) = |Hr>, Bob gets |Xi, r>.
  FamilyParams p{0.0, 0.3, 0.4, 0.5, 0.6};
  const PureState xi_r = family_state(BellKind::phi_plus, p);
  Ket expect = Ket::Zero(4);
  expect[1] = std::cos(p.theta);
  expect[3] = -std::polar(1.0, p.phi) * std::sin(p.theta);
  CHECK(oracle::overlap(xi_r.amplitudes(), expect) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("family protocol presets") {
  // Canonical parameters give the canonical conditionals.
  for (std::uint64_t s = 0; s < 16; ++s) {
    const auto fam = run_family(canonical_family_params(), s);
    const auto branches = bsa_project(hyperentangled_resource());
    const Ket want = branches[static_cast<std::size_t>(fam.alice->outcome_index)].bob->amplitudes();
    CHECK(oracle::overlap(bob_ket(fam), want) == doctest::Approx(1.0).epsilon(1e-10));
  }
  // LC1: the four vector-beam states.
  const auto lc1 = lc1_family_params();
  const char* expected[4] = {"Hh+Vv", "Hv-Vh", "Hh-Vv", "Hv+Vh"};
  for (int b = 0; b < 4; ++b) {
    const Ket s = family_state(kBellKinds[static_cast<std::size_t>(b)], lc1).amplitudes();
    CHECK(oracle::overlap(s, named_state(expected[b]).pure->amplitudes()) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("mixed-state preparation") {
  const auto psi = prepare_classically_correlated(CorrelatedSector::psi);
  CMatrix want_psi = CMatrix::Zero(4, 4);
  want_psi(1, 1) = want_psi(2, 2) = 0.5;
  CHECK((bob_density(psi).matrix() - want_psi).norm() < 1e-12);
  CHECK(psi.cbits_sent == 1);
  CHECK(psi.alice->probability == doctest::Approx(0.5));

  const auto phi = prepare_classically_correlated(CorrelatedSector::phi);
  CMatrix want_phi = CMatrix::Zero(4, 4);
  want_phi(0, 0) = want_phi(3, 3) = 0.5;
  CHECK((bob_density(phi).matrix() - want_phi).norm() < 1e-12);

  const CMatrix half = 0.5 * (oracle::proj(oracle::psi_plus()) + oracle::proj(oracle::psi_minus()));
  CHECK((half - want_psi).norm() < 1e-12);

  // Rotating Alice's polarization by H<->V swaps the heralded sector's basis.
  const auto rotated = prepare_classically_correlated(CorrelatedSector::psi, pauli_x());
  CHECK((bob_density(rotated).matrix() - want_phi).norm() < 1e-12);

  const auto mixed = prepare_completely_mixed();
  CHECK((bob_density(mixed).matrix() - CMatrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(mixed.cbits_sent == 0);
}

TEST_CASE("dephasing") {
  const auto psi_p = DensityMatrix::from_ket(oracle::psi_plus());
  CHECK((dephase_spin_orbit(psi_p, 0.0).matrix() - psi_p.matrix()).norm() < 1e-15);
  CMatrix want = CMatrix::Zero(4, 4);
  want(1, 1) = want(2, 2) = 0.5;
  CHECK((dephase_spin_orbit(psi_p, 1.0).matrix() - want).norm() < 1e-15);
  const auto half = dephase_spin_orbit(psi_p, 0.5);
  const double t = tangle(half);
  CHECK(t > 0.0);
  CHECK(t < 1.0);
  CHECK(t == doctest::Approx(oracle::concurrence(half.matrix()) * oracle::concurrence(half.matrix())).epsilon(1e-9));
  CHECK_THROWS_AS(dephase_spin_orbit(psi_p, 1.5), std::invalid_argument);
  // Agrees with mixing the state and its V->-V image.
  const CMatrix z = correction_unitary(PauliCorrection::flip_v);
  const double s = 0.3;
  const CMatrix mix = (1 - s / 2) * psi_p.matrix() + (s / 2) * z * psi_p.matrix() * z.adjoint();
  CHECK((dephase_spin_orbit(psi_p, s).matrix() - mix).norm() < 1e-14);
}

TEST_CASE("ensembles") {
  const PureState fp = spin_orbit_bell(BellKind::phi_plus);
  std::vector<std::pair<double, PureState>> one = {{1.0, fp}};
  CHECK((prepare_ensemble(one).matrix() - oracle::proj(oracle::phi_plus())).norm() < 1e-15);
  std::vector<std::pair<double, PureState>> all;
  for (auto k : kBellKinds) all.emplace_back(0.25, spin_orbit_bell(k));
  CHECK((prepare_ensemble(all).matrix() - CMatrix::Identity(4, 4) / 4.0).norm() < 1e-15);
  std::vector<std::pair<double, PureState>> bad = {{0.6, fp}, {0.6, fp}};
  CHECK_THROWS_AS(prepare_ensemble(bad), std::invalid_argument);
  std::vector<std::pair<double, PureState>> neg = {{1.5, fp}, {-0.5, fp}};
  CHECK_THROWS_AS(prepare_ensemble(neg), std::invalid_argument);
}

TEST_CASE("povm kraus operators") {
  const auto f = povm_kraus(AmplitudeQuad{1, 0, 0, 0});
  CHECK((f.operators()[0] - oracle::proj(oracle::phi_plus())).norm() < 1e-15);
  const auto half = povm_kraus(AmplitudeQuad{0.5, 0.5, 0.5, 0.5});
  for (const auto& op : half.operators()) CHECK((op - 0.5 * CMatrix::Identity(4, 4)).norm() < 1e-15);

  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const auto q = oracle::random_quad(rng);
    const auto k = povm_kraus(AmplitudeQuad::from_array(q));
    CHECK(completeness_deficiency(k.operators()) < 1e-10);
    // F_3 carries (c, d, a, b) on (phi+, phi-, psi+, psi-).
    if (t < 5) {
      const auto b = oracle::bells();
      CMatrix f3 = q[2] * oracle::proj(b[0]) + q[3] * oracle::proj(b[1]) + q[0] * oracle::proj(b[2]) + q[1] * oracle::proj(b[3]);
      CHECK((k.operators()[2] - f3).norm() < 1e-14);
    }
  }
}

TEST_CASE("arbitrary-state protocol, full outcome enumeration") {
  std::mt19937_64 rng(9);
  const auto b = oracle::bells();
  const double s = oracle::kS;
  const std::array<Ket, 4> vn = {oracle::vec({s, 0, s, 0}), oracle::vec({s, 0, -s, 0}),
                                 oracle::vec({0, s, 0, s}), oracle::vec({0, s, 0, -s})};
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = oracle::random_quad(rng);
    const Ket target = oracle::quad_state(q[0], q[1], q[2], q[3]);
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      CMatrix fi = CMatrix::Zero(4, 4);
      for (int m = 0; m < 4; ++m) fi += q[static_cast<std::size_t>((m + i) % 4)] * oracle::proj(b[static_cast<std::size_t>(m)]);
      const Ket filtered = kron(fi, CMatrix::Identity(4, 4)) * oracle::resource();
      for (int j = 0; j < 4; ++j) {
        const Ket raw = conditional(filtered, vn[static_cast<std::size_t>(j)]);
        CHECK(raw.squaredNorm() == doctest::Approx(1.0 / 16).epsilon(1e-12));
        total += raw.squaredNorm();
        const CMatrix c = bell_permutation_unitary(arbitrary_correction(i + 1, j + 1));
        CHECK(unitarity_deviation(c) < 1e-12);
        CHECK(oracle::overlap(c * raw / raw.norm(), target) == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("arbitrary-state protocol: sign cases for F3") {
  const cplx a = 0.1, bq = cplx(0.2, 0.3), c = -0.4, d = 0.5;
  const double n = std::sqrt(std::norm(a) + std::norm(bq) + std::norm(c) + std::norm(d));
  const std::array<cplx, 4> q = {a / n, bq / n, c / n, d / n};
  const auto b = oracle::bells();
  CMatrix f3 = q[2] * oracle::proj(b[0]) + q[3] * oracle::proj(b[1]) + q[0] * oracle::proj(b[2]) + q[1] * oracle::proj(b[3]);
  const Ket filtered = kron(f3, CMatrix::Identity(4, 4)) * oracle::resource();
  const double s = oracle::kS;
  auto raw = [&](const Ket& v) {
    const Ket r = conditional(filtered, v);
    return Ket(r / r.norm());
  };
  CHECK(oracle::overlap(raw(oracle::vec({s, 0, -s, 0})), oracle::quad_state(-q[0], q[1], q[2], q[3])) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(oracle::overlap(raw(oracle::vec({0, s, 0, s})), oracle::quad_state(q[0], q[1], q[2], -q[3])) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(oracle::overlap(raw(oracle::vec({0, s, 0, -s})), oracle::quad_state(q[0], q[1], -q[2], q[3])) == doctest::Approx(1.0).epsilon(1e-12));
  // Outcome (i) flips the phi- component; the four sign patterns are mutually orthogonal.
  CHECK(oracle::overlap(raw(oracle::vec({s, 0, s, 0})), oracle::quad_state(q[0], -q[1], q[2], q[3])) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_arbitrary_resp") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    const auto q = oracle::random_quad(rng);
    const Ket target = oracle::quad_state(q[0], q[1], q[2], q[3]);
    const auto det = run_arbitrary_resp(AmplitudeQuad::from_array(q), static_cast<std::uint64_t>(t));
    CHECK(det.cbits_sent == 4);
    CHECK(det.success);
    CHECK(oracle::overlap(bob_ket(det), target) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(det.alice->probability == doctest::Approx(1.0 / 16));

    const auto her = run_arbitrary_resp(AmplitudeQuad::from_array(q), static_cast<std::uint64_t>(t), true);
    CHECK(her.cbits_sent == 1);
    CHECK(her.success_probability == doctest::Approx(1.0 / 16));
    CHECK(her.success == (*her.alice->povm_index == kHeraldPovm && *her.alice->vn_index == kHeraldVn));
    if (her.success) CHECK(oracle::overlap(bob_ket(her), target) == doctest::Approx(1.0).epsilon(1e-10));
  }
  int successes = 0;
  for (std::uint64_t s = 0; s < 1600; ++s)
    successes += run_arbitrary_resp(AmplitudeQuad{0.5, 0.5, 0.5, 0.5}, s, true).success ? 1 : 0;
  CHECK(std::abs(successes - 100) < 5 * std::sqrt(1600 * (1.0 / 16) * (15.0 / 16)));
}
