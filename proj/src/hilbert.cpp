#include "sorsp/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "sorsp/rng.hpp"

namespace sorsp {

bool is_supported_dimension(Eigen::Index d) { return d == 2 || d == 4 || d == 16; }

namespace {

void require_dimension(Eigen::Index d, const char* what) {
  if (!is_supported_dimension(d)) {
    throw std::invalid_argument(fmt::format("{}: dimension {} not in {{2, 4, 16}}", what, d));
  }
}

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(fmt::format("{}: matrix is {}x{}, expected square", what,
                                            m.rows(), m.cols()));
  }
}

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------

PureState::PureState(Ket amplitudes, std::vector<std::string> labels)
    : amplitudes_(std::move(amplitudes)), labels_(std::move(labels)) {
  require_dimension(amplitudes_.size(), "PureState");
  if (static_cast<Eigen::Index>(labels_.size()) != amplitudes_.size()) {
    throw std::invalid_argument(fmt::format("PureState: {} labels for dimension {}",
                                            labels_.size(), amplitudes_.size()));
  }
  const double norm2 = amplitudes_.squaredNorm();
  if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > kNormTolerance) {
    throw std::invalid_argument(fmt::format("PureState: squared norm {:.17g} != 1", norm2));
  }
}

cplx PureState::amplitude(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw std::out_of_range("PureState: no basis label '" + label + "'");
  }
  return amplitudes_[it - labels_.begin()];
}

DensityMatrix::DensityMatrix(CMatrix matrix) : matrix_(std::move(matrix)) {
  require_square(matrix_, "DensityMatrix");
  require_dimension(matrix_.rows(), "DensityMatrix");
  if (!matrix_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entry");
  const double herm = max_abs(matrix_ - matrix_.adjoint());
  if (herm > kHermitianTolerance) {
    throw std::invalid_argument(fmt::format("DensityMatrix: not Hermitian (deviation {:.3g})", herm));
  }
  const cplx tr = matrix_.trace();
  if (std::abs(tr - 1.0) > kTraceTolerance) {
    throw std::invalid_argument(
        fmt::format("DensityMatrix: trace {:.17g}{:+.3g}i != 1", tr.real(), tr.imag()));
  }
  const double min_eig = hermitian_eigenvalues(matrix_)(0);
  if (min_eig < -kEigenvalueFloor) {
    throw std::invalid_argument(
        fmt::format("DensityMatrix: negative eigenvalue {:.3g}", min_eig));
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) { return from_ket(psi.amplitudes()); }

DensityMatrix DensityMatrix::from_ket(const Ket& psi) {
  CMatrix rho = psi * psi.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index d) {
  return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
}

Projector::Projector(CMatrix matrix) : matrix_(std::move(matrix)) {
  require_square(matrix_, "Projector");
  if (max_abs(matrix_ - matrix_.adjoint()) > kHermitianTolerance) {
    throw std::invalid_argument("Projector: not Hermitian");
  }
  if (max_abs(matrix_ * matrix_ - matrix_) > kHermitianTolerance) {
    throw std::invalid_argument("Projector: not idempotent");
  }
  rank_ = static_cast<int>(std::lround(matrix_.trace().real()));
}

Projector Projector::onto(const Ket& v) {
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("Projector::onto: zero vector");
  const Ket u = v / n;
  CMatrix p = u * u.adjoint();
  p = 0.5 * (p + p.adjoint()).eval();
  return Projector(std::move(p));
}

double completeness_deficiency(std::span<const CMatrix> operators) {
  if (operators.empty()) throw std::invalid_argument("measurement has no operators");
  const Eigen::Index d = operators.front().rows();
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& f : operators) {
    if (f.rows() != d || f.cols() != d) {
      throw std::invalid_argument("measurement operators have mismatched shapes");
    }
    sum += f.adjoint() * f;
  }
  return (sum - CMatrix::Identity(d, d)).norm();
}

double unitarity_deviation(const CMatrix& u) {
  require_square(u, "unitary");
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
}

KrausSet::KrausSet(std::vector<CMatrix> operators) : operators_(std::move(operators)) {
  const double deficiency = completeness_deficiency(operators_);
  if (deficiency > kCompletenessTolerance) {
    throw std::invalid_argument(
        fmt::format("KrausSet: completeness violated, ||sum F^dag F - I|| = {:.3g}", deficiency));
  }
}

KrausSet KrausSet::from_projectors(std::span<const Projector> projectors) {
  std::vector<CMatrix> ops;
  ops.reserve(projectors.size());
  for (const auto& p : projectors) ops.push_back(p.matrix());
  return KrausSet(std::move(ops));
}

// ---------------------------------------------------------------------------

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

PureState tensor(const PureState& a, const PureState& b) {
  const Eigen::Index d = a.dim() * b.dim();
  if (d > kMaxDimension) {
    throw std::invalid_argument(
        fmt::format("tensor: dimension {} exceeds the modeled maximum {}", d, kMaxDimension));
  }
  Ket amps(d);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    for (Eigen::Index j = 0; j < b.dim(); ++j) {
      amps[i * b.dim() + j] = a.amplitudes()[i] * b.amplitudes()[j];
      labels.push_back(a.labels()[static_cast<std::size_t>(i)] +
                       b.labels()[static_cast<std::size_t>(j)]);
    }
  }
  amps /= amps.norm();
  return PureState(std::move(amps), std::move(labels));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  const Eigen::Index d = a.dim() * b.dim();
  if (d > kMaxDimension) {
    throw std::invalid_argument(
        fmt::format("tensor: dimension {} exceeds the modeled maximum {}", d, kMaxDimension));
  }
  CMatrix m = kron(a.matrix(), b.matrix());
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(std::move(m));
}

DensityMatrix partial_trace(const DensityMatrix& rho, Bipartition parts, Keep keep) {
  if (parts.first < 1 || parts.second < 1 || parts.first * parts.second != rho.dim()) {
    throw std::invalid_argument(fmt::format(
        "partial_trace: structure {}x{} inconsistent with dimension {}", parts.first,
        parts.second, rho.dim()));
  }
  const Eigen::Index da = parts.first;
  const Eigen::Index db = parts.second;
  const CMatrix& m = rho.matrix();
  CMatrix out;
  if (keep == Keep::first) {
    out = CMatrix::Zero(da, da);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index k = 0; k < db; ++k) out(i, j) += m(i * db + k, j * db + k);
  } else {
    out = CMatrix::Zero(db, db);
    for (Eigen::Index i = 0; i < db; ++i)
      for (Eigen::Index j = 0; j < db; ++j)
        for (Eigen::Index k = 0; k < da; ++k) out(i, j) += m(k * db + i, k * db + j);
  }
  out = 0.5 * (out + out.adjoint()).eval();
  out /= out.trace().real();
  return DensityMatrix(std::move(out));
}

// ---------------------------------------------------------------------------

namespace {

void require_unitary(const CMatrix& u, Eigen::Index d) {
  if (u.rows() != d || u.cols() != d) {
    throw std::invalid_argument(
        fmt::format("apply_unitary: operator is {}x{}, state dimension {}", u.rows(), u.cols(), d));
  }
  const double dev = unitarity_deviation(u);
  if (dev > kUnitarityTolerance) {
    throw std::invalid_argument(
        fmt::format("apply_unitary: operator is not unitary, ||U^dag U - I|| = {:.3g}", dev));
  }
}

}  // namespace

PureState apply_unitary(const PureState& psi, const CMatrix& u) {
  require_unitary(u, psi.dim());
  Ket out = u * psi.amplitudes();
  out /= out.norm();
  return PureState(std::move(out), psi.labels());
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const CMatrix& u) {
  require_unitary(u, rho.dim());
  CMatrix out = u * rho.matrix() * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  out /= out.trace().real();
  return DensityMatrix(std::move(out));
}

namespace {

void require_complete(std::span<const CMatrix> operators, Eigen::Index d) {
  if (operators.empty()) throw std::invalid_argument("born_probabilities: no outcomes");
  if (operators.front().rows() != d) {
    throw std::invalid_argument(fmt::format(
        "born_probabilities: operators act on dimension {}, state has {}",
        operators.front().rows(), d));
  }
  const double deficiency = completeness_deficiency(operators);
  if (deficiency > kCompletenessTolerance) {
    throw std::invalid_argument(fmt::format(
        "born_probabilities: outcome set incomplete, ||sum F^dag F - I|| = {:.3g}", deficiency));
  }
}

}  // namespace

std::vector<PureOutcome> born_probabilities(const PureState& psi,
                                            std::span<const CMatrix> operators) {
  require_complete(operators, psi.dim());
  std::vector<PureOutcome> out;
  out.reserve(operators.size());
  for (const auto& f : operators) {
    Ket v = f * psi.amplitudes();
    const double p = v.squaredNorm();
    if (p > 0.0) {
      v /= std::sqrt(p);
      out.push_back({p, PureState(std::move(v), psi.labels())});
    } else {
      out.push_back({0.0, std::nullopt});
    }
  }
  return out;
}

std::vector<PureOutcome> born_probabilities(const PureState& psi, const KrausSet& kraus) {
  return born_probabilities(psi, std::span<const CMatrix>(kraus.operators()));
}

std::vector<PureOutcome> born_probabilities(const PureState& psi,
                                            std::span<const Projector> projectors) {
  std::vector<CMatrix> ops;
  ops.reserve(projectors.size());
  for (const auto& p : projectors) ops.push_back(p.matrix());
  return born_probabilities(psi, std::span<const CMatrix>(ops));
}

std::vector<MixedOutcome> born_probabilities(const DensityMatrix& rho,
                                             std::span<const CMatrix> operators) {
  require_complete(operators, rho.dim());
  std::vector<MixedOutcome> out;
  out.reserve(operators.size());
  for (const auto& f : operators) {
    CMatrix m = f * rho.matrix() * f.adjoint();
    const double p = m.trace().real();
    if (p > 0.0) {
      m /= p;
      m = 0.5 * (m + m.adjoint()).eval();
      out.push_back({p, DensityMatrix(std::move(m))});
    } else {
      out.push_back({0.0, std::nullopt});
    }
  }
  return out;
}

std::vector<MixedOutcome> born_probabilities(const DensityMatrix& rho, const KrausSet& kraus) {
  return born_probabilities(rho, std::span<const CMatrix>(kraus.operators()));
}

Sample sample_outcome(const PureState& psi, std::span<const CMatrix> operators,
                      std::mt19937_64& rng) {
  auto outcomes = born_probabilities(psi, operators);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t chosen = outcomes.size();
  std::size_t last_nonzero = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].probability <= 0.0) continue;
    last_nonzero = k;
    cumulative += outcomes[k].probability;
    if (u < cumulative) {
      chosen = k;
      break;
    }
  }
  // Rounding can leave u just above the final cumulative sum.
  if (chosen == outcomes.size()) chosen = last_nonzero;
  return {chosen, std::move(*outcomes[chosen].post)};
}

Sample sample_outcome(const PureState& psi, std::span<const CMatrix> operators,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_outcome(psi, operators, rng);
}

// ---------------------------------------------------------------------------

double overlap(const Ket& a, const Ket& b) {
  if (a.size() != b.size()) throw std::invalid_argument("overlap: dimension mismatch");
  return std::abs(a.dot(b));
}

double overlap(const PureState& a, const PureState& b) {
  return overlap(a.amplitudes(), b.amplitudes());
}

double phase_aligned_distance(const Ket& a, const Ket& b) {
  if (a.size() != b.size()) throw std::invalid_argument("phase_aligned_distance: dimension mismatch");
  const cplx ip = b.dot(a);  // <b|a>
  const cplx phase = std::abs(ip) > 0.0 ? ip / std::abs(ip) : cplx(1.0, 0.0);
  return (a - phase * b).norm();
}

Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      if (ev(i) < -kEigenvalueFloor) {
        throw std::invalid_argument(
            fmt::format("psd_sqrt: eigenvalue {:.3g} below the PSD floor", ev(i)));
      }
      ev(i) = 0.0;
    }
    ev(i) = std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Eigen::Matrix2cd pauli_y() {
  Eigen::Matrix2cd m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace sorsp
