#include "sorsp/states.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace sorsp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const cplx kI{0.0, 1.0};

Eigen::Vector2cd pol_vector(char p, const CircularConvention& conv) {
  switch (p) {
    case 'H': return {1.0, 0.0};
    case 'V': return {0.0, 1.0};
    case 'R': return Eigen::Vector2cd(1.0, conv.v_phase) * kInvSqrt2;
    case 'L': return Eigen::Vector2cd(1.0, -conv.v_phase) * kInvSqrt2;
    default: throw std::invalid_argument(fmt::format("unknown polarization label '{}'", p));
  }
}

Eigen::Vector2cd spatial_vector(char s) {
  switch (s) {
    case 'l': return {1.0, 0.0};
    case 'r': return {0.0, 1.0};
    case 'h': return Eigen::Vector2cd(1.0, 1.0) * kInvSqrt2;
    case 'v': return Eigen::Vector2cd(kI, -kI) * kInvSqrt2;
    default: throw std::invalid_argument(fmt::format("unknown spatial label '{}'", s));
  }
}

Ket label_ket(const std::string& label, const CircularConvention& conv) {
  if (label.size() != 2) {
    throw std::invalid_argument("single-photon label must have two characters: '" + label + "'");
  }
  const Eigen::Vector2cd p = pol_vector(label[0], conv);
  const Eigen::Vector2cd s = spatial_vector(label[1]);
  Ket out(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out[2 * i + j] = p[i] * s[j];
  return out;
}

// Canonical-basis ket of a single-photon state given in any labeled basis.
Ket canonical_amplitudes(const PureState& psi, const CircularConvention& conv) {
  if (psi.dim() != 4) {
    throw std::invalid_argument(
        fmt::format("basis conversion needs a single-photon state, got dimension {}", psi.dim()));
  }
  Ket out = Ket::Zero(4);
  for (int k = 0; k < 4; ++k) out += psi.amplitudes()[k] * label_ket(psi.labels()[k], conv);
  return out;
}

PureState express_in(const Ket& canonical, const std::vector<std::string>& labels,
                     const CircularConvention& conv) {
  Ket out(4);
  for (int k = 0; k < 4; ++k) out[k] = label_ket(labels[k], conv).dot(canonical);
  out /= out.norm();
  return PureState(std::move(out), labels);
}

std::vector<std::string> labels_for(char pol0, char pol1, char sp0, char sp1) {
  return {std::string{pol0, sp0}, std::string{pol0, sp1}, std::string{pol1, sp0},
          std::string{pol1, sp1}};
}

Ket bell_ket(BellKind kind) {
  Ket v = Ket::Zero(4);
  switch (kind) {
    case BellKind::phi_plus: v << 1, 0, 0, 1; break;
    case BellKind::phi_minus: v << 1, 0, 0, -1; break;
    case BellKind::psi_plus: v << 0, 1, 1, 0; break;
    case BellKind::psi_minus: v << 0, 1, -1, 0; break;
  }
  return v * kInvSqrt2;
}

}  // namespace

std::string to_string(BellKind k) {
  switch (k) {
    case BellKind::phi_plus: return "phi+";
    case BellKind::phi_minus: return "phi-";
    case BellKind::psi_plus: return "psi+";
    case BellKind::psi_minus: return "psi-";
  }
  return "?";
}

BellKind bell_kind_from_string(const std::string& s) {
  for (auto k : kBellKinds)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown Bell kind '" + s + "' (expected phi+, phi-, psi+, psi-)");
}

const std::vector<std::string>& photon_labels() {
  static const std::vector<std::string> labels = {"Hl", "Hr", "Vl", "Vr"};
  return labels;
}

const std::vector<std::string>& pair_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& a : photon_labels())
      for (const auto& b : photon_labels()) out.push_back(a + b);
    return out;
  }();
  return labels;
}

PureState basis_ket(const std::string& label) {
  static const std::vector<std::string> spin = {"H", "V"};
  static const std::vector<std::string> orbit = {"l", "r"};
  for (const auto* set : {&spin, &orbit, &photon_labels(), &pair_labels()}) {
    for (std::size_t k = 0; k < set->size(); ++k) {
      if ((*set)[k] == label) {
        Ket v = Ket::Zero(static_cast<Eigen::Index>(set->size()));
        v[static_cast<Eigen::Index>(k)] = 1.0;
        return PureState(std::move(v), *set);
      }
    }
  }
  throw std::invalid_argument("unknown basis label '" + label + "'");
}

Ket spin_orbit_bell_ket(BellKind kind) { return bell_ket(kind); }

PureState spin_orbit_bell(BellKind kind) { return PureState(bell_ket(kind), photon_labels()); }

PureState two_photon_bell(PairBell kind, Dof dof) {
  const char a = dof == Dof::spin ? 'H' : 'l';
  const char b = dof == Dof::spin ? 'V' : 'r';
  std::vector<std::string> labels = {std::string{a, a}, std::string{a, b}, std::string{b, a},
                                     std::string{b, b}};
  Ket v(4);
  switch (kind) {
    case PairBell::Phi_plus: v << 1, 0, 0, 1; break;
    case PairBell::Phi_minus: v << 1, 0, 0, -1; break;
    case PairBell::Psi_plus: v << 0, 1, 1, 0; break;
    case PairBell::Psi_minus: v << 0, 1, -1, 0; break;
  }
  return PureState(v * kInvSqrt2, std::move(labels));
}

PureState regroup_by_photon(const PureState& by_dof) {
  if (by_dof.dim() != 16) throw std::invalid_argument("regroup_by_photon: expected 16 dimensions");
  Ket out(16);
  std::vector<std::string> labels(16);
  for (int pa = 0; pa < 2; ++pa)
    for (int pb = 0; pb < 2; ++pb)
      for (int oa = 0; oa < 2; ++oa)
        for (int ob = 0; ob < 2; ++ob) {
          const int src = 8 * pa + 4 * pb + 2 * oa + ob;
          const int dst = 8 * pa + 4 * oa + 2 * pb + ob;
          out[dst] = by_dof.amplitudes()[src];
          const std::string& l = by_dof.labels()[static_cast<std::size_t>(src)];
          if (l.size() != 4) throw std::invalid_argument("regroup_by_photon: labels must be 4 chars");
          labels[static_cast<std::size_t>(dst)] = std::string{l[0], l[2], l[1], l[3]};
        }
  return PureState(std::move(out), std::move(labels));
}

PureState hyperentangled_resource() {
  return regroup_by_photon(tensor(two_photon_bell(PairBell::Phi_plus, Dof::spin),
                                  two_photon_bell(PairBell::Psi_plus, Dof::orbit)));
}

PureState hyperentangled_resource_bell_sum() {
  // (phi+ psi+ + phi- psi- + psi+ phi+ + psi- phi-)/2, Alice first.
  const std::array<std::pair<BellKind, BellKind>, 4> terms = {{
      {BellKind::phi_plus, BellKind::psi_plus},
      {BellKind::phi_minus, BellKind::psi_minus},
      {BellKind::psi_plus, BellKind::phi_plus},
      {BellKind::psi_minus, BellKind::phi_minus},
  }};
  Ket sum = Ket::Zero(16);
  for (const auto& [a, b] : terms) sum += 0.5 * kron(bell_ket(a), bell_ket(b));
  return PureState(sum / sum.norm(), pair_labels());
}

FamilyParams canonical_family_params() {
  return {std::numbers::pi / 4, std::numbers::pi / 4, 0.0, 0.0, 0.0};
}

FamilyParams lc1_family_params() {
  return {std::numbers::pi / 4, std::numbers::pi / 4, 0.0, std::numbers::pi / 4,
          std::numbers::pi / 2};
}

Eigen::Vector2cd xi_polarization(double theta, double phi) {
  return {std::cos(theta), -std::polar(1.0, phi) * std::sin(theta)};
}

Eigen::Vector2cd xi_perp_polarization(double theta, double phi) {
  return {std::sin(theta), std::polar(1.0, phi) * std::cos(theta)};
}

Eigen::Matrix2cd alice_polarization_unitary(const FamilyParams& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const cplx e_eta = std::polar(1.0, p.eta);
  const cplx e_phi = std::polar(1.0, p.phi);
  Eigen::Matrix2cd u;
  // Columns are the images of H and V.
  u << c, e_phi * s,
       e_eta * s, -e_phi * e_eta * c;
  return u;
}

PureState family_state(BellKind branch, const FamilyParams& p) {
  const Eigen::Vector2cd xi = xi_polarization(p.theta, p.phi);
  const Eigen::Vector2cd xp = xi_perp_polarization(p.theta, p.phi);
  const Eigen::Vector2cd l(1.0, 0.0);
  const Eigen::Vector2cd r(0.0, 1.0);
  const cplx e_eta = std::polar(1.0, p.eta);
  auto prod = [](const Eigen::Vector2cd& pol, const Eigen::Vector2cd& orb) {
    Ket v(4);
    v << pol[0] * orb[0], pol[0] * orb[1], pol[1] * orb[0], pol[1] * orb[1];
    return v;
  };
  Ket v(4);
  switch (branch) {
    case BellKind::phi_plus:
      v = std::cos(p.alpha) * prod(xi, r) + e_eta * std::sin(p.alpha) * prod(xp, l);
      break;
    case BellKind::phi_minus:
      v = std::sin(p.alpha) * prod(xi, r) - e_eta * std::cos(p.alpha) * prod(xp, l);
      break;
    case BellKind::psi_plus:
      v = std::cos(p.beta) * prod(xi, l) + e_eta * std::sin(p.beta) * prod(xp, r);
      break;
    case BellKind::psi_minus:
      v = std::sin(p.beta) * prod(xi, l) - e_eta * std::cos(p.beta) * prod(xp, r);
      break;
  }
  return PureState(v / v.norm(), photon_labels());
}

void validate(const AmplitudeQuad& q) {
  const double n2 = std::norm(q.a) + std::norm(q.b) + std::norm(q.c) + std::norm(q.d);
  if (!std::isfinite(n2) || std::abs(n2 - 1.0) > kNormTolerance) {
    throw std::invalid_argument(
        fmt::format("amplitude quad not normalized: |a|^2+|b|^2+|c|^2+|d|^2 = {:.17g}", n2));
  }
}

PureState arbitrary_state(const AmplitudeQuad& q) {
  validate(q);
  const auto coeffs = q.as_array();
  Ket v = Ket::Zero(4);
  for (int k = 0; k < 4; ++k) v += coeffs[static_cast<std::size_t>(k)] * bell_ket(kBellKinds[static_cast<std::size_t>(k)]);
  return PureState(v / v.norm(), photon_labels());
}

AmplitudeQuad bell_coefficients(const PureState& psi) {
  const Ket canonical = canonical_amplitudes(psi, adopted_circular_convention());
  std::array<cplx, 4> c{};
  for (std::size_t k = 0; k < 4; ++k) c[k] = bell_ket(kBellKinds[k]).dot(canonical);
  return AmplitudeQuad::from_array(c);
}

// ---------------------------------------------------------------------------

std::vector<CircularConvention> circular_convention_candidates() {
  return {CircularConvention{cplx(0.0, 1.0)}, CircularConvention{cplx(0.0, -1.0)}};
}

CircularConvention adopted_circular_convention() {
  // The candidate satisfying |Rr> - |Ll> = |Hv> + |Vh>; the choice is
  // checked by tests and printed by the conventions command.
  return CircularConvention{cplx(0.0, 1.0)};
}

PureState spatial_basis_convert(const PureState& psi, SpatialBasis to) {
  const CircularConvention conv = adopted_circular_convention();
  const Ket canonical = canonical_amplitudes(psi, conv);
  const char p0 = psi.labels()[0][0];
  const char p1 = psi.labels()[2][0];
  return to == SpatialBasis::lr ? express_in(canonical, labels_for(p0, p1, 'l', 'r'), conv)
                                : express_in(canonical, labels_for(p0, p1, 'h', 'v'), conv);
}

PureState circular_pol_convert(const PureState& psi, PolBasis to, const CircularConvention& conv) {
  const Ket canonical = canonical_amplitudes(psi, conv);
  const char s0 = psi.labels()[0][1];
  const char s1 = psi.labels()[1][1];
  return to == PolBasis::hv ? express_in(canonical, labels_for('H', 'V', s0, s1), conv)
                            : express_in(canonical, labels_for('R', 'L', s0, s1), conv);
}

PureState ket_from_terms(const std::vector<std::pair<std::string, cplx>>& terms,
                         const CircularConvention& conv) {
  Ket v = Ket::Zero(4);
  for (const auto& [label, amp] : terms) v += amp * label_ket(label, conv);
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("ket_from_terms: terms cancel to the zero vector");
  return PureState(v / n, photon_labels());
}

double radial_identity_residual(const CircularConvention& conv) {
  const PureState lhs = ket_from_terms({{"Rr", 1.0}, {"Ll", -1.0}}, conv);
  const PureState rhs = ket_from_terms({{"Hv", 1.0}, {"Vh", 1.0}}, conv);
  return phase_aligned_distance(lhs.amplitudes(), rhs.amplitudes());
}

double resource_identity_residual() {
  return phase_aligned_distance(hyperentangled_resource().amplitudes(),
                                hyperentangled_resource_bell_sum().amplitudes());
}

// ---------------------------------------------------------------------------

namespace {

NamedState pure_named(std::string key, std::string display, const PureState& psi) {
  return {std::move(key), std::move(display), DensityMatrix::from_pure(psi), psi};
}

NamedState diagonal_mixture(std::string key, std::string display, const std::string& a,
                            const std::string& b) {
  CMatrix m = 0.5 * (DensityMatrix::from_pure(basis_ket(a)).matrix() +
                     DensityMatrix::from_pure(basis_ket(b)).matrix());
  return {std::move(key), std::move(display), DensityMatrix(std::move(m)), std::nullopt};
}

}  // namespace

std::vector<NamedState> table_targets() {
  std::vector<NamedState> out;
  out.push_back(pure_named("phi+", "phi+", spin_orbit_bell(BellKind::phi_plus)));
  out.push_back(pure_named("phi-", "phi-", spin_orbit_bell(BellKind::phi_minus)));
  out.push_back(pure_named("psi+", "psi+", spin_orbit_bell(BellKind::psi_plus)));
  out.push_back(pure_named("psi-", "psi-", spin_orbit_bell(BellKind::psi_minus)));
  out.push_back(diagonal_mixture("cc-phi", "(|Hl><Hl|+|Vr><Vr|)/2", "Hl", "Vr"));
  out.push_back(diagonal_mixture("cc-psi", "(|Hr><Hr|+|Vl><Vl|)/2", "Hr", "Vl"));
  out.push_back({"mixed", "1/4", DensityMatrix::maximally_mixed(4), std::nullopt});
  out.push_back(pure_named("Hh+Vv", "(|Hh>+|Vv>)/sqrt2", ket_from_terms({{"Hh", 1.0}, {"Vv", 1.0}})));
  out.push_back(pure_named("Hh-Vv", "(|Hh>-|Vv>)/sqrt2", ket_from_terms({{"Hh", 1.0}, {"Vv", -1.0}})));
  out.push_back(pure_named("Hv+Vh", "(|Hv>+|Vh>)/sqrt2", ket_from_terms({{"Hv", 1.0}, {"Vh", 1.0}})));
  out.push_back(pure_named("Hv-Vh", "(|Hv>-|Vh>)/sqrt2", ket_from_terms({{"Hv", 1.0}, {"Vh", -1.0}})));
  return out;
}

std::vector<std::string> named_state_keys() {
  std::vector<std::string> keys;
  for (const auto& t : table_targets()) keys.push_back(t.key);
  for (const char* extra : {"radial", "azimuthal", "Hl", "Hr", "Vl", "Vr"}) keys.emplace_back(extra);
  return keys;
}

NamedState named_state(const std::string& key) {
  if (key == "radial") {
    auto s = named_state("Hv+Vh");
    s.key = "radial";
    return s;
  }
  if (key == "azimuthal") {
    auto s = named_state("Hh-Vv");
    s.key = "azimuthal";
    return s;
  }
  for (auto& t : table_targets())
    if (t.key == key) return t;
  for (const auto& l : photon_labels())
    if (l == key) return pure_named(key, "|" + key + ">", basis_ket(key));
  throw std::invalid_argument("unknown state '" + key + "'");
}

}  // namespace sorsp
