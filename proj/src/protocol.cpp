#include "sorsp/protocol.hpp"

#include <cmath>

#include <fmt/format.h>

namespace sorsp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kConditionalTolerance = 1e-6;

CMatrix identity4() { return CMatrix::Identity(4, 4); }

// Lifts a 4x4 operator on Alice's photon to the pair.
CMatrix on_alice(const CMatrix& a) { return kron(a, identity4()); }

std::string two_bits(int v) { return fmt::format("{:02b}", v); }

PureState normalized(const Ket& v) { return PureState(v / v.norm(), photon_labels()); }

}  // namespace

std::string to_string(PauliCorrection c) {
  switch (c) {
    case PauliCorrection::identity: return "do nothing";
    case PauliCorrection::flip_v: return "V->-V";
    case PauliCorrection::swap_hv: return "H<->V";
    case PauliCorrection::flip_then_swap: return "V->-V and H<->V";
  }
  return "?";
}

Eigen::Matrix2cd polarization_matrix(PauliCorrection c) {
  switch (c) {
    case PauliCorrection::identity: return Eigen::Matrix2cd::Identity();
    case PauliCorrection::flip_v: return pauli_z();
    case PauliCorrection::swap_hv: return pauli_x();
    case PauliCorrection::flip_then_swap: return pauli_x() * pauli_z();
  }
  return Eigen::Matrix2cd::Identity();
}

CMatrix correction_unitary(PauliCorrection c) {
  return kron(polarization_matrix(c), Eigen::Matrix2cd::Identity());
}

BellKind canonical_partner(BellKind alice_outcome) {
  switch (alice_outcome) {
    case BellKind::phi_plus: return BellKind::psi_plus;
    case BellKind::phi_minus: return BellKind::psi_minus;
    case BellKind::psi_plus: return BellKind::phi_plus;
    case BellKind::psi_minus: return BellKind::phi_minus;
  }
  return BellKind::phi_plus;
}

PauliCorrection correction_rule(BellKind alice_outcome, BellKind target) {
  using P = PauliCorrection;
  // [target][alice outcome], outcomes ordered phi+, phi-, psi+, psi-.
  static constexpr P table[4][4] = {
      /* phi+ */ {P::swap_hv, P::flip_then_swap, P::identity, P::flip_v},
      /* phi- */ {P::flip_then_swap, P::swap_hv, P::flip_v, P::identity},
      /* psi+ */ {P::identity, P::flip_v, P::swap_hv, P::flip_then_swap},
      /* psi- */ {P::flip_v, P::identity, P::flip_then_swap, P::swap_hv},
  };
  return table[index_of(target)][index_of(alice_outcome)];
}

std::array<Ket, 4> alice_bsa_basis(std::optional<RotatedAngles> rotated) {
  std::array<Ket, 4> basis;
  if (!rotated) {
    for (auto k : kBellKinds) basis[static_cast<std::size_t>(index_of(k))] = spin_orbit_bell_ket(k);
    return basis;
  }
  const double ca = std::cos(rotated->alpha), sa = std::sin(rotated->alpha);
  const double cb = std::cos(rotated->beta), sb = std::sin(rotated->beta);
  for (auto& v : basis) v = Ket::Zero(4);
  // Order within a vector: Hl, Hr, Vl, Vr.
  basis[0] << 0, ca, sa, 0;    // cos a |Hr> + sin a |Vl>
  basis[1] << 0, sa, -ca, 0;   // sin a |Hr> - cos a |Vl>
  basis[2] << cb, 0, 0, sb;    // cos b |Hl> + sin b |Vr>
  basis[3] << sb, 0, 0, -cb;   // sin b |Hl> - cos b |Vr>
  return basis;
}

std::string bsa_label(BellKind k, bool rotated) {
  std::string base = to_string(k) + "_A";
  if (!rotated) return base;
  const bool phi = k == BellKind::phi_plus || k == BellKind::phi_minus;
  return base + (phi ? "(alpha)" : "(beta)");
}

Ket contract_alice(const Ket& joint, const Ket& alice) {
  if (joint.size() != 16 || alice.size() != 4) {
    throw std::invalid_argument("contract_alice: expected a 16-dim joint ket and 4-dim Alice ket");
  }
  Ket bob = Ket::Zero(4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) bob[b] += std::conj(alice[a]) * joint[4 * a + b];
  return bob;
}

std::vector<BsaBranch> bsa_project(const PureState& resource, std::optional<RotatedAngles> rotated) {
  if (resource.dim() != 16) {
    throw std::invalid_argument(
        fmt::format("bsa_project: resource must be 16-dimensional, got {}", resource.dim()));
  }
  const auto basis = alice_bsa_basis(rotated);
  std::vector<BsaBranch> out;
  for (auto k : kBellKinds) {
    const Ket bob = contract_alice(resource.amplitudes(), basis[static_cast<std::size_t>(index_of(k))]);
    const double p = bob.squaredNorm();
    BsaBranch branch{k, bsa_label(k, rotated.has_value()), p, std::nullopt};
    if (p > 0.0) branch.bob = normalized(bob);
    out.push_back(std::move(branch));
  }
  return out;
}

CorrectionResult apply_correction(BellKind alice_outcome, BellKind target, const PureState& bob) {
  if (bob.dim() != 4) throw std::invalid_argument("apply_correction: Bob's state must be 4-dimensional");
  double best = 0.0;
  for (auto k : kBellKinds) best = std::max(best, overlap(spin_orbit_bell_ket(k), bob.amplitudes()));
  if (best < 1.0 - kConditionalTolerance) {
    throw std::invalid_argument(fmt::format(
        "apply_correction: conditional is not a spin-orbit Bell state (best overlap {:.9f})", best));
  }
  const BellKind expected = canonical_partner(alice_outcome);
  const double fit = overlap(spin_orbit_bell_ket(expected), bob.amplitudes());
  if (fit < 1.0 - kConditionalTolerance) {
    throw std::invalid_argument(fmt::format(
        "apply_correction: outcome {} heralds {} but Bob's overlap with it is {:.9f}",
        bsa_label(alice_outcome, false), to_string(expected), fit));
  }
  const PauliCorrection rule = correction_rule(alice_outcome, target);
  return {apply_unitary(bob, correction_unitary(rule)), rule, two_bits(index_of(alice_outcome))};
}

DensityMatrix bob_density(const ProtocolTranscript& t) {
  if (const auto* psi = std::get_if<PureState>(&t.bob_state)) return DensityMatrix::from_pure(*psi);
  return std::get<DensityMatrix>(t.bob_state);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<CMatrix> bsa_measurement(const std::array<Ket, 4>& basis) {
  std::vector<CMatrix> ops;
  for (const auto& v : basis) ops.push_back(on_alice(v * v.adjoint()));
  return ops;
}

}  // namespace

ProtocolTranscript run_resp(BellKind target, std::uint64_t seed) {
  const PureState resource = hyperentangled_resource();
  const auto basis = alice_bsa_basis();
  const auto ops = bsa_measurement(basis);
  const auto outcomes = born_probabilities(resource, ops);
  const Sample s = sample_outcome(resource, ops, seed);
  const BellKind outcome = kBellKinds[s.index];
  const PureState bob = normalized(contract_alice(s.post.amplitudes(), basis[s.index]));
  CorrectionResult corrected = apply_correction(outcome, target, bob);

  ProtocolTranscript t{.protocol = "resp",
                       .alice = AliceRecord{bsa_label(outcome, false),
                                            outcomes[s.index].probability,
                                            static_cast<int>(s.index), std::nullopt, std::nullopt},
                       .cbits_sent = 2,
                       .ebits_consumed = 2,
                       .message_bits = corrected.message_bits,
                       .correction = {"pauli", to_string(corrected.rule),
                                      correction_unitary(corrected.rule)},
                       .bob_state = std::move(corrected.state),
                       .success = true,
                       .success_probability = 1.0,
                       .seed = seed};
  return t;
}

CMatrix family_frame_unitary() { return kron(pauli_z(), pauli_x()); }

ProtocolTranscript run_family(const FamilyParams& p, std::uint64_t seed) {
  const CMatrix u_alice = kron(alice_polarization_unitary(p), Eigen::Matrix2cd::Identity());
  const PureState evolved = apply_unitary(hyperentangled_resource(), on_alice(u_alice));
  const auto basis = alice_bsa_basis(RotatedAngles{p.alpha, p.beta});
  const auto ops = bsa_measurement(basis);
  const auto outcomes = born_probabilities(evolved, ops);
  const Sample s = sample_outcome(evolved, ops, seed);
  const BellKind outcome = kBellKinds[s.index];
  const PureState raw = normalized(contract_alice(s.post.amplitudes(), basis[s.index]));
  PureState bob = apply_unitary(raw, family_frame_unitary());

  ProtocolTranscript t{.protocol = "family",
                       .alice = AliceRecord{bsa_label(outcome, true), outcomes[s.index].probability,
                                            static_cast<int>(s.index), std::nullopt, std::nullopt},
                       .cbits_sent = 2,
                       .ebits_consumed = 2,
                       .message_bits = two_bits(static_cast<int>(s.index)),
                       .correction = {"frame", "fixed V->-V on polarization and l<->r on orbit",
                                      family_frame_unitary()},
                       .bob_state = std::move(bob),
                       .success = true,
                       .success_probability = 1.0,
                       .seed = seed};
  return t;
}

ProtocolTranscript prepare_classically_correlated(CorrelatedSector sector,
                                                  std::optional<Eigen::Matrix2cd> alice_rotation) {
  PureState shared = hyperentangled_resource();
  if (alice_rotation) {
    const CMatrix u = kron(*alice_rotation, Eigen::Matrix2cd::Identity());
    shared = apply_unitary(shared, on_alice(u));
  }
  // Alice's port that heralds the requested Bob sector.
  const bool alice_phi_port = sector == CorrelatedSector::psi;
  const auto basis = alice_bsa_basis();
  CMatrix port = CMatrix::Zero(4, 4);
  CMatrix other = CMatrix::Zero(4, 4);
  for (auto k : kBellKinds) {
    const Ket& v = basis[static_cast<std::size_t>(index_of(k))];
    const bool is_phi = k == BellKind::phi_plus || k == BellKind::phi_minus;
    (is_phi == alice_phi_port ? port : other) += v * v.adjoint();
  }
  const std::vector<CMatrix> ops = {on_alice(port), on_alice(other)};
  const auto outcomes = born_probabilities(DensityMatrix::from_pure(shared), std::span<const CMatrix>(ops));
  const DensityMatrix bob = partial_trace(*outcomes[0].post, {4, 4}, Keep::second);

  ProtocolTranscript t;
  t.protocol = "classically-correlated";
  t.alice = AliceRecord{alice_phi_port ? "phi_A" : "psi_A", outcomes[0].probability, 0,
                        std::nullopt, std::nullopt};
  t.cbits_sent = 1;
  t.ebits_consumed = 2;
  t.message_bits = alice_phi_port ? "0" : "1";
  t.correction = {"none", "do nothing", identity4()};
  t.bob_state = bob;
  return t;
}

ProtocolTranscript prepare_completely_mixed() {
  const DensityMatrix joint = DensityMatrix::from_pure(hyperentangled_resource());
  ProtocolTranscript t;
  t.protocol = "completely-mixed";
  t.cbits_sent = 0;
  t.ebits_consumed = 2;
  t.correction = {"none", "do nothing", identity4()};
  t.bob_state = partial_trace(joint, {4, 4}, Keep::second);
  return t;
}

DensityMatrix dephase_spin_orbit(const DensityMatrix& bob, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument(fmt::format("dephase_spin_orbit: strength {} outside [0, 1]", strength));
  }
  if (bob.dim() != 4) throw std::invalid_argument("dephase_spin_orbit: expected a 4-dim state");
  CMatrix m = bob.matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < 4; ++j) {
      m(i, j) *= (1.0 - strength);
      m(j, i) *= (1.0 - strength);
    }
  return DensityMatrix(std::move(m));
}

DensityMatrix prepare_ensemble(std::span<const std::pair<double, PureState>> components) {
  if (components.empty()) throw std::invalid_argument("prepare_ensemble: no components");
  const Eigen::Index d = components.front().second.dim();
  double total = 0.0;
  CMatrix rho = CMatrix::Zero(d, d);
  for (const auto& [w, psi] : components) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument(fmt::format("prepare_ensemble: invalid weight {}", w));
    }
    if (psi.dim() != d) throw std::invalid_argument("prepare_ensemble: dimension mismatch");
    total += w;
    rho += w * psi.amplitudes() * psi.amplitudes().adjoint();
  }
  if (std::abs(total - 1.0) > kNormTolerance) {
    throw std::invalid_argument(fmt::format("prepare_ensemble: weights sum to {:.17g}", total));
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

// ---------------------------------------------------------------------------

KrausSet povm_kraus(const AmplitudeQuad& q) {
  validate(q);
  const auto coeffs = q.as_array();
  std::vector<CMatrix> ops;
  for (int i = 0; i < 4; ++i) {
    CMatrix f = CMatrix::Zero(4, 4);
    for (int m = 0; m < 4; ++m) {
      const Ket v = spin_orbit_bell_ket(kBellKinds[static_cast<std::size_t>(m)]);
      f += coeffs[static_cast<std::size_t>((m + i) % 4)] * (v * v.adjoint());
    }
    ops.push_back(std::move(f));
  }
  return KrausSet(std::move(ops));
}

std::array<Ket, 4> von_neumann_basis() {
  std::array<Ket, 4> basis;
  for (auto& v : basis) v = Ket::Zero(4);
  basis[0] << kInvSqrt2, 0, kInvSqrt2, 0;    // (H+V) l
  basis[1] << kInvSqrt2, 0, -kInvSqrt2, 0;   // (H-V) l
  basis[2] << 0, kInvSqrt2, 0, kInvSqrt2;    // (H+V) r
  basis[3] << 0, kInvSqrt2, 0, -kInvSqrt2;   // (H-V) r
  return basis;
}

const BellPermutation& arbitrary_correction(int povm, int vn) {
  if (povm < 1 || povm > 4 || vn < 1 || vn > 4) {
    throw std::out_of_range(fmt::format("arbitrary_correction: outcome (F{}, {}) out of range", povm, vn));
  }
  // POVM outcome F_i leaves Bob's Bell component k carrying coefficient
  // q[target[k]], a cyclic shift; the von Neumann outcome flips the sign of
  // exactly one component.
  static constexpr std::array<std::array<int, 4>, 4> targets = {{
      {2, 3, 0, 1},  // F1
      {3, 0, 1, 2},  // F2
      {0, 1, 2, 3},  // F3
      {1, 2, 3, 0},  // F4
  }};
  static constexpr std::array<std::array<int, 4>, 4> signs = {{
      {1, -1, 1, 1},   // (i)
      {-1, 1, 1, 1},   // (ii)
      {1, 1, 1, -1},   // (iii)
      {1, 1, -1, 1},   // (iv)
  }};
  static const std::array<std::array<BellPermutation, 4>, 4> table = [] {
    std::array<std::array<BellPermutation, 4>, 4> t{};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) t[i][j] = {targets[i], signs[j]};
    return t;
  }();
  return table[static_cast<std::size_t>(povm - 1)][static_cast<std::size_t>(vn - 1)];
}

CMatrix bell_permutation_unitary(const BellPermutation& perm) {
  CMatrix u = CMatrix::Zero(4, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const Ket from = spin_orbit_bell_ket(kBellKinds[k]);
    const Ket to = spin_orbit_bell_ket(kBellKinds[static_cast<std::size_t>(perm.target[k])]);
    u += static_cast<double>(perm.sign[k]) * to * from.adjoint();
  }
  return u;
}

std::string describe(const BellPermutation& perm) {
  std::string out;
  for (std::size_t k = 0; k < 4; ++k) {
    if (k) out += ", ";
    out += fmt::format("{}->{}{}", to_string(kBellKinds[k]), perm.sign[k] < 0 ? "-" : "",
                       to_string(kBellKinds[static_cast<std::size_t>(perm.target[k])]));
  }
  return out;
}

ProtocolTranscript run_arbitrary_resp(const AmplitudeQuad& q, std::uint64_t seed, bool heralded) {
  const KrausSet povm = povm_kraus(q);
  const auto vn = von_neumann_basis();
  std::vector<CMatrix> ops;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Ket& v = vn[static_cast<std::size_t>(j)];
      ops.push_back(on_alice((v * v.adjoint()) * povm.operators()[static_cast<std::size_t>(i)]));
    }
  const PureState resource = hyperentangled_resource();
  const auto outcomes = born_probabilities(resource, ops);
  const Sample s = sample_outcome(resource, ops, seed);
  const int povm_index = static_cast<int>(s.index / 4) + 1;
  const int vn_index = static_cast<int>(s.index % 4) + 1;
  const PureState raw =
      normalized(contract_alice(s.post.amplitudes(), vn[static_cast<std::size_t>(vn_index - 1)]));

  ProtocolTranscript t;
  t.protocol = heralded ? "arbitrary-heralded" : "arbitrary";
  static constexpr const char* kRoman[] = {"i", "ii", "iii", "iv"};
  t.alice = AliceRecord{fmt::format("F{},({})", povm_index, kRoman[vn_index - 1]),
                        outcomes[s.index].probability, static_cast<int>(s.index), povm_index,
                        vn_index};
  t.ebits_consumed = 2;
  t.seed = seed;

  if (!heralded) {
    const BellPermutation& perm = arbitrary_correction(povm_index, vn_index);
    const CMatrix u = bell_permutation_unitary(perm);
    t.cbits_sent = 4;
    t.message_bits = two_bits(povm_index - 1) + two_bits(vn_index - 1);
    t.correction = {"bell-permutation", describe(perm), u};
    t.bob_state = apply_unitary(raw, u);
    return t;
  }

  // Alice sends one bit: keep or discard. On "keep" Bob applies the
  // pre-agreed correction for the designated outcome, which needs no
  // further information.
  const BellPermutation& perm = arbitrary_correction(kHeraldPovm, kHeraldVn);
  const CMatrix u = bell_permutation_unitary(perm);
  t.cbits_sent = 1;
  t.success = povm_index == kHeraldPovm && vn_index == kHeraldVn;
  t.success_probability = outcomes[static_cast<std::size_t>((kHeraldPovm - 1) * 4 + kHeraldVn - 1)].probability;
  t.message_bits = t.success ? "1" : "0";
  if (t.success) {
    t.correction = {"bell-permutation", describe(perm), u};
    t.bob_state = apply_unitary(raw, u);
  } else {
    t.correction = {"none", "discard", identity4()};
    t.bob_state = raw;
  }
  return t;
}

}  // namespace sorsp
