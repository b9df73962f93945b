// Named states and basis conventions for spin (polarization) and orbit (OAM)
// qubits of one photon, and for the hyperentangled photon pair.
//
// Conventions (fixed jointly with the beams module):
//   polarization   |R> = (|H> + i|V>)/sqrt2,  |L> = (|H> - i|V>)/sqrt2
//   spatial        |h> = (|l> + |r>)/sqrt2,   |v> = i(|l> - |r>)/sqrt2
// The phase on |v> makes h and v the two real first-order Hermite-Gauss modes
// under the LG mode mapping used by beams, and it is the only choice of the
// |v> phase for which |Rr> - |Ll> = |Hv> + |Vh> holds with circular R, L.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sorsp/hilbert.hpp"

namespace sorsp {

/// Single-photon spin-orbit Bell states, in the order used everywhere:
/// phi+ = (Hl + Vr)/sqrt2, phi- = (Hl - Vr)/sqrt2,
/// psi+ = (Hr + Vl)/sqrt2, psi- = (Hr - Vl)/sqrt2.
enum class BellKind { phi_plus = 0, phi_minus = 1, psi_plus = 2, psi_minus = 3 };

/// Two-photon Bell states of one degree of freedom.
enum class PairBell { Phi_plus, Phi_minus, Psi_plus, Psi_minus };
enum class Dof { spin, orbit };

inline constexpr std::array<BellKind, 4> kBellKinds = {
    BellKind::phi_plus, BellKind::phi_minus, BellKind::psi_plus, BellKind::psi_minus};

std::string to_string(BellKind k);   // "phi+", "phi-", "psi+", "psi-"
BellKind bell_kind_from_string(const std::string& s);
inline int index_of(BellKind k) { return static_cast<int>(k); }

const std::vector<std::string>& photon_labels();  // Hl, Hr, Vl, Vr
const std::vector<std::string>& pair_labels();    // HlHl ... VrVr (Alice then Bob)

PureState basis_ket(const std::string& label);  // e.g. "Hl", or "H"/"l" for one qubit

PureState spin_orbit_bell(BellKind kind);
Ket spin_orbit_bell_ket(BellKind kind);
PureState two_photon_bell(PairBell kind, Dof dof);

/// Reorders a 16-dim ket from (polA polB orbA orbB) to photon-grouped
/// (polA orbA polB orbB) ordering.
PureState regroup_by_photon(const PureState& by_dof);

/// Phi+_spin (x) Psi+_orbit built as a tensor product and regrouped per photon.
PureState hyperentangled_resource();
/// The same resource built from its four-term Bell decomposition.
PureState hyperentangled_resource_bell_sum();

struct FamilyParams {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// Canonical point: reproduces the plain spin-orbit Bell states.
FamilyParams canonical_family_params();
/// Preset realizing H -> (H+V)/sqrt2, V -> i(H-V)/sqrt2 with 45 degree BSA.
FamilyParams lc1_family_params();

Eigen::Vector2cd xi_polarization(double theta, double phi);
Eigen::Vector2cd xi_perp_polarization(double theta, double phi);

/// Alice's polarization unitary:
/// H -> cos(t)H + e^{i eta} sin(t) V,  V -> e^{i phi}(sin(t) H - e^{i eta} cos(t) V).
Eigen::Matrix2cd alice_polarization_unitary(const FamilyParams& p);

/// Bob's four-parameter family states; branch selects phi+/phi-/psi+/psi-.
PureState family_state(BellKind branch, const FamilyParams& p);

struct AmplitudeQuad {
  cplx a, b, c, d;
  std::array<cplx, 4> as_array() const { return {a, b, c, d}; }
  static AmplitudeQuad from_array(const std::array<cplx, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
};

void validate(const AmplitudeQuad& q);
/// a phi+ + b phi- + c psi+ + d psi-.
PureState arbitrary_state(const AmplitudeQuad& q);
/// Inverse of arbitrary_state via Bell-basis inner products.
AmplitudeQuad bell_coefficients(const PureState& psi);

// ---------------------------------------------------------------------------
// Basis conversions on the single-photon space.

enum class SpatialBasis { lr, hv };
enum class PolBasis { hv, rl };

/// Defines |R> = (|H> + v_phase|V>)/sqrt2 and |L> = (|H> - v_phase|V>)/sqrt2.
struct CircularConvention {
  cplx v_phase{0.0, 1.0};
};

/// Candidate circular conventions and the one the library adopts.
std::vector<CircularConvention> circular_convention_candidates();
CircularConvention adopted_circular_convention();

/// Converts the orbit qubit between (l, r) and (h, v) labels.
PureState spatial_basis_convert(const PureState& psi, SpatialBasis to);
/// Converts the polarization qubit between (H, V) and (R, L) labels.
PureState circular_pol_convert(const PureState& psi, PolBasis to,
                               const CircularConvention& conv = adopted_circular_convention());

/// Builds a single-photon ket from amplitudes given on arbitrary labels drawn
/// from {H,V,R,L} x {l,r,h,v}; result is in the canonical (Hl,Hr,Vl,Vr) basis.
PureState ket_from_terms(const std::vector<std::pair<std::string, cplx>>& terms,
                         const CircularConvention& conv = adopted_circular_convention());

/// Phase-aligned residual || (|Rr>-|Ll>)/sqrt2 - (|Hv>+|Vh>)/sqrt2 ||.
double radial_identity_residual(const CircularConvention& conv);
/// Phase-aligned residual between both sides of the Bell decomposition of the resource.
double resource_identity_residual();

// ---------------------------------------------------------------------------
// Target catalog.

struct NamedState {
  std::string key;      // CLI selector
  std::string display;  // human-readable form
  DensityMatrix rho;
  std::optional<PureState> pure;
};

/// The eleven targets of the quality table: four Bell states, two classically
/// correlated mixtures, the completely mixed state, and four vector-beam states.
std::vector<NamedState> table_targets();
/// Table targets plus the "radial" and "azimuthal" aliases and basis kets.
NamedState named_state(const std::string& key);
std::vector<std::string> named_state_keys();

}  // namespace sorsp
