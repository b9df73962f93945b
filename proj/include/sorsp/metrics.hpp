// Figures of merit for a prepared two-qubit (spin (x) orbit) state.
#pragma once

#include <variant>

#include "sorsp/hilbert.hpp"

namespace sorsp {

using Target = std::variant<PureState, DensityMatrix>;

/// <psi|rho|psi> for a pure target, (Tr sqrt(sqrt(s) rho sqrt(s)))^2 for a mixed one.
double fidelity(const DensityMatrix& rho, const PureState& target);
double fidelity(const DensityMatrix& rho, const DensityMatrix& target);
double fidelity(const DensityMatrix& rho, const Target& target);

/// Wootters concurrence; the orbit qubit is read as l -> 0, r -> 1.
double concurrence(const DensityMatrix& rho);
double tangle(const DensityMatrix& rho);

/// (d/(d-1)) (1 - Tr rho^2); for two qubits 0 is pure and 1 is I/4.
double linear_entropy(const DensityMatrix& rho);
double purity(const DensityMatrix& rho);

struct QualityReport {
  double fidelity;
  double tangle;
  double linear_entropy;
  double purity;
};

QualityReport quality_report(const DensityMatrix& rho, const Target& target);

}  // namespace sorsp
