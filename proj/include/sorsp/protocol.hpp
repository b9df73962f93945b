// Remote preparation protocols over the hyperentangled pair.
//
// Alice holds photon A, Bob photon B; the shared resource is
// Phi+_spin (x) Psi+_orbit in photon-grouped ordering. Every protocol returns a
// ProtocolTranscript recording Alice's outcome, the classical message, Bob's
// correction and his final state.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sorsp/hilbert.hpp"
#include "sorsp/states.hpp"

namespace sorsp {

/// Polarization-only corrections drawn from the canonical rule set.
enum class PauliCorrection {
  identity,        // do nothing
  flip_v,          // V -> -V
  swap_hv,         // H <-> V
  flip_then_swap,  // V -> -V and H <-> V
};

std::string to_string(PauliCorrection c);
Eigen::Matrix2cd polarization_matrix(PauliCorrection c);
/// 4x4 operator on Bob's photon: polarization_matrix (x) identity on orbit.
CMatrix correction_unitary(PauliCorrection c);

/// Correction Bob applies for Alice's canonical BSA outcome when the target
/// is `target`. For target psi+ this is the reference rule set; the other
/// rows compose it with the fixed Pauli that relabels psi+ into the target.
PauliCorrection correction_rule(BellKind alice_outcome, BellKind target);

/// Bob's state after the canonical BSA outcome: phi+-_A -> psi+-_B, psi+-_A -> phi+-_B.
BellKind canonical_partner(BellKind alice_outcome);

struct RotatedAngles {
  double alpha;
  double beta;
};

/// Alice's four BSA vectors in the order phi+, phi-, psi+, psi-. The rotated
/// analyzer uses phi+-(alpha) on {Hr, Vl} and psi+-(beta) on {Hl, Vr}.
std::array<Ket, 4> alice_bsa_basis(std::optional<RotatedAngles> rotated = std::nullopt);
std::string bsa_label(BellKind k, bool rotated);

struct BsaBranch {
  BellKind outcome;
  std::string label;
  double probability;
  std::optional<PureState> bob;  // normalized; empty if probability is zero
};

std::vector<BsaBranch> bsa_project(const PureState& resource,
                                   std::optional<RotatedAngles> rotated = std::nullopt);

/// (<a| (x) I) |joint>, Bob's unnormalized conditional ket.
Ket contract_alice(const Ket& joint, const Ket& alice);

struct Correction {
  std::string kind;         // "none", "pauli", "frame", "bell-permutation"
  std::string description;
  CMatrix unitary;          // acting on Bob's 4-dim photon
};

struct CorrectionResult {
  PureState state;
  PauliCorrection rule;
  std::string message_bits;  // 2-bit encoding of Alice's outcome
};

/// Applies the table correction; throws if `bob` is not the Bell state the
/// outcome heralds.
CorrectionResult apply_correction(BellKind alice_outcome, BellKind target, const PureState& bob);

struct AliceRecord {
  std::string label;
  double probability = 0.0;
  int outcome_index = 0;
  std::optional<int> povm_index;  // 1-based F_i
  std::optional<int> vn_index;    // 1-based (i)..(iv)
};

struct ProtocolTranscript {
  std::string protocol;
  std::optional<AliceRecord> alice;
  int cbits_sent = 0;
  int ebits_consumed = 2;
  std::string message_bits;
  Correction correction;
  std::variant<PureState, DensityMatrix> bob_state = DensityMatrix::maximally_mixed(4);
  bool success = true;
  double success_probability = 1.0;
  std::optional<std::uint64_t> seed;
};

DensityMatrix bob_density(const ProtocolTranscript& t);

ProtocolTranscript run_resp(BellKind target, std::uint64_t seed);

/// Fixed local unitary (sigma_z on polarization, sigma_x on orbit) relating
/// Bob's raw conditional to the closed-form family states.
CMatrix family_frame_unitary();
ProtocolTranscript run_family(const FamilyParams& p, std::uint64_t seed);

/// Bob's Bell sector left after Alice's unresolved-sign BSA. Alice's phi port
/// heralds the psi sector and vice versa.
enum class CorrelatedSector { phi, psi };

ProtocolTranscript prepare_classically_correlated(
    CorrelatedSector sector, std::optional<Eigen::Matrix2cd> alice_rotation = std::nullopt);
ProtocolTranscript prepare_completely_mixed();

/// Scales the coherences between the H and V polarization blocks by
/// (1 - strength): at strength 1 Bob can no longer tell phi+ from phi-.
DensityMatrix dephase_spin_orbit(const DensityMatrix& bob, double strength);

DensityMatrix prepare_ensemble(std::span<const std::pair<double, PureState>> components);

// ---------------------------------------------------------------------------
// Arbitrary two-qubit preparation with a four-outcome POVM.

/// F_1..F_4 on Alice's photon: coefficients (a,b,c,d) cyclically shifted over
/// the ordered Bell projectors (phi+, phi-, psi+, psi-).
KrausSet povm_kraus(const AmplitudeQuad& q);

/// Alice's von Neumann basis after filtering: (H+V)l, (H-V)l, (H+V)r, (H-V)r.
std::array<Ket, 4> von_neumann_basis();

/// C |Bell_k> = sign[k] |Bell_{target[k]}>.
struct BellPermutation {
  std::array<int, 4> target;
  std::array<int, 4> sign;
};

/// Frozen correction for POVM outcome F_{povm} and von Neumann outcome vn (both 1-based).
const BellPermutation& arbitrary_correction(int povm, int vn);
CMatrix bell_permutation_unitary(const BellPermutation& perm);
std::string describe(const BellPermutation& perm);

/// Designated outcome of the heralded variant: (F_3, (i)).
inline constexpr int kHeraldPovm = 3;
inline constexpr int kHeraldVn = 1;

ProtocolTranscript run_arbitrary_resp(const AmplitudeQuad& q, std::uint64_t seed,
                                      bool heralded = false);

}  // namespace sorsp
