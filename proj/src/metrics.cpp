#include "sorsp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace sorsp {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw std::invalid_argument(fmt::format("{}: dimension mismatch ({} vs {})", what, a, b));
}

void require_two_qubits(const DensityMatrix& rho, const char* what) {
  if (rho.dim() != 4) {
    throw std::invalid_argument(fmt::format("{}: expected a 4x4 density matrix, got {}", what, rho.dim()));
  }
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double fidelity(const DensityMatrix& rho, const PureState& target) {
  require_same_dim(rho.dim(), target.dim(), "fidelity");
  const Ket& psi = target.amplitudes();
  return clamp01((psi.adjoint() * rho.matrix() * psi)(0, 0).real());
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& target) {
  require_same_dim(rho.dim(), target.dim(), "fidelity");
  const CMatrix s = psd_sqrt(target.matrix());
  CMatrix inner = s * rho.matrix() * s;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  const Eigen::VectorXd ev = hermitian_eigenvalues(inner);
  double tr = 0.0;
  for (double e : ev) tr += std::sqrt(std::max(e, 0.0));
  return clamp01(tr * tr);
}

double fidelity(const DensityMatrix& rho, const Target& target) {
  return std::visit([&](const auto& t) { return fidelity(rho, t); }, target);
}

double concurrence(const DensityMatrix& rho) {
  require_two_qubits(rho, "concurrence");
  const Eigen::Matrix2cd y = pauli_y();
  const CMatrix yy = kron(y, y);
  const CMatrix tilde = yy * rho.matrix().conjugate() * yy;
  // Hermitian route: eigenvalues of sqrt(rho) tilde sqrt(rho) equal those of rho tilde.
  const CMatrix s = psd_sqrt(rho.matrix());
  CMatrix r = s * tilde * s;
  r = 0.5 * (r + r.adjoint()).eval();
  const Eigen::VectorXd ev = hermitian_eigenvalues(r);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) lam[static_cast<std::size_t>(i)] = std::sqrt(std::max(ev[3 - i], 0.0));
  return std::clamp(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0);
}

double tangle(const DensityMatrix& rho) {
  const double c = concurrence(rho);
  return c * c;
}

double linear_entropy(const DensityMatrix& rho) {
  const double d = static_cast<double>(rho.dim());
  const double p = (rho.matrix() * rho.matrix()).trace().real();
  return clamp01(d / (d - 1.0) * (1.0 - p));
}

double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

QualityReport quality_report(const DensityMatrix& rho, const Target& target) {
  require_two_qubits(rho, "quality_report");
  const double sl = linear_entropy(rho);
  return {fidelity(rho, target), tangle(rho), sl, 1.0 - 0.75 * sl};
}

}  // namespace sorsp
