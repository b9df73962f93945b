// Small-dimension complex linear algebra for spin-orbit photon states.
//
// Basis ordering is fixed once for the whole library:
//   single photon  (Hl, Hr, Vl, Vr)   index = 2*pol + orbit, H=0 V=1, l=0 r=1
//   photon pair    Alice (x) Bob, each in the single-photon order
// Dimensions are restricted to {2, 4, 16}.
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sorsp {

using cplx = std::complex<double>;
using Ket = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-12;
inline constexpr double kEigenvalueFloor = 1e-10;
inline constexpr double kCompletenessTolerance = 1e-10;
inline constexpr double kUnitarityTolerance = 1e-10;
inline constexpr int kMaxDimension = 16;

bool is_supported_dimension(Eigen::Index d);

/// Unit-norm ket over a labeled tensor basis.
class PureState {
 public:
  PureState(Ket amplitudes, std::vector<std::string> labels);

  const Ket& amplitudes() const { return amplitudes_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Eigen::Index dim() const { return amplitudes_.size(); }

  /// Amplitude of the basis vector carrying `label`; throws if absent.
  cplx amplitude(const std::string& label) const;

 private:
  Ket amplitudes_;
  std::vector<std::string> labels_;
};

/// Hermitian, unit-trace, PSD operator (up to the eigenvalue floor).
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix matrix);
  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix from_ket(const Ket& psi);
  static DensityMatrix maximally_mixed(Eigen::Index d);

  const CMatrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  CMatrix matrix_;
};

/// Orthogonal projector (P^2 = P, P^dagger = P).
class Projector {
 public:
  explicit Projector(CMatrix matrix);
  static Projector onto(const Ket& v);  // rank-1, v normalized internally

  const CMatrix& matrix() const { return matrix_; }
  int rank() const { return rank_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  CMatrix matrix_;
  int rank_;
};

/// Kraus operators of a complete generalized measurement.
class KrausSet {
 public:
  explicit KrausSet(std::vector<CMatrix> operators);
  static KrausSet from_projectors(std::span<const Projector> projectors);

  const std::vector<CMatrix>& operators() const { return operators_; }
  std::size_t size() const { return operators_.size(); }
  Eigen::Index dim() const { return operators_.front().rows(); }

 private:
  std::vector<CMatrix> operators_;
};

/// Frobenius norm of sum_i F_i^dagger F_i - I.
double completeness_deficiency(std::span<const CMatrix> operators);
/// Frobenius norm of U^dagger U - I.
double unitarity_deviation(const CMatrix& u);

// ---------------------------------------------------------------------------
// Tensor products and partial trace

PureState tensor(const PureState& a, const PureState& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Declared bipartite structure of a density matrix: first (x) second.
struct Bipartition {
  Eigen::Index first;
  Eigen::Index second;
};

enum class Keep { first, second };

DensityMatrix partial_trace(const DensityMatrix& rho, Bipartition parts, Keep keep);

// ---------------------------------------------------------------------------
// Evolution and measurement

PureState apply_unitary(const PureState& psi, const CMatrix& u);
DensityMatrix apply_unitary(const DensityMatrix& rho, const CMatrix& u);

struct PureOutcome {
  double probability;
  std::optional<PureState> post;  // empty when probability is zero
};

struct MixedOutcome {
  double probability;
  std::optional<DensityMatrix> post;
};

std::vector<PureOutcome> born_probabilities(const PureState& psi,
                                            std::span<const CMatrix> operators);
std::vector<PureOutcome> born_probabilities(const PureState& psi, const KrausSet& kraus);
std::vector<PureOutcome> born_probabilities(const PureState& psi,
                                            std::span<const Projector> projectors);
std::vector<MixedOutcome> born_probabilities(const DensityMatrix& rho,
                                             std::span<const CMatrix> operators);
std::vector<MixedOutcome> born_probabilities(const DensityMatrix& rho, const KrausSet& kraus);

struct Sample {
  std::size_t index;
  PureState post;
};

Sample sample_outcome(const PureState& psi, std::span<const CMatrix> operators,
                      std::mt19937_64& rng);
Sample sample_outcome(const PureState& psi, std::span<const CMatrix> operators,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Comparisons

/// |<a|b>|, the phase-insensitive overlap of two kets.
double overlap(const Ket& a, const Ket& b);
double overlap(const PureState& a, const PureState& b);

/// min over global phase of ||a - e^{i t} b||.
double phase_aligned_distance(const Ket& a, const Ket& b);

/// Eigenvalues of a Hermitian matrix in ascending order.
Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m);

/// Hermitian square root with eigenvalues in [-floor, 0) clamped to zero.
CMatrix psd_sqrt(const CMatrix& m);

/// Pauli matrices on one qubit.
Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_y();
Eigen::Matrix2cd pauli_z();

}  // namespace sorsp
