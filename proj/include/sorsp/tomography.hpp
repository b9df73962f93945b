// Simulated state tomography: setting catalogs, Poisson counts, linear
// inversion and maximum-likelihood reconstruction, Monte Carlo error bars.
//
// Spatial diagonal modes are d = (l + i r)/sqrt2, a = (l - i r)/sqrt2, so the
// six spatial settings l, r, h, v, d, a mirror the polarization set
// H, V, D, A, R, L under l <-> H, r <-> V.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sorsp/hilbert.hpp"
#include "sorsp/metrics.hpp"

namespace sorsp {

struct Setting {
  char pol;      // H V D A R L
  char spatial;  // l r h v d a, or 0 for polarization-only settings
  Projector projector;

  std::string label() const;
};

Eigen::Vector2cd polarization_ket(char pol);
Eigen::Vector2cd spatial_ket(char mode);

/// 36 product settings on the spin-orbit photon.
const std::vector<Setting>& setting_catalog();
/// 6 polarization-only settings (dim 2).
const std::vector<Setting>& polarization_catalog();
const Setting& setting_by_label(const std::string& label);

/// Rank of the settings' projectors viewed as vectors in operator space.
int design_rank(std::span<const Setting> settings);

struct CountRecord {
  std::vector<Setting> settings;
  std::vector<double> counts;  // integral when sampled; exact expectations allowed
  double acquisition_time = 1.0;  // seconds per setting
  double rate = 1.0;              // expected events per second at unit projection

  double mean_total() const { return rate * acquisition_time; }
  Eigen::Index dim() const { return settings.empty() ? 0 : settings.front().projector.dim(); }
  double total() const;
  void validate() const;
};

using NoiseChannel = std::function<DensityMatrix(const DensityMatrix&)>;

/// mean_total * Tr[P rho] per setting.
std::vector<double> expected_counts(const DensityMatrix& rho, std::span<const Setting> settings,
                                    double mean_total);

CountRecord noiseless_counts(const DensityMatrix& rho, std::span<const Setting> settings,
                             double rate, double acquisition_time = 1.0);

CountRecord simulate_counts(const DensityMatrix& rho, std::span<const Setting> settings,
                            double rate, double acquisition_time, std::uint64_t seed,
                            const NoiseChannel& noise = {});

struct LinearEstimate {
  CMatrix rho;  // Hermitian, trace 1, possibly not PSD
  double min_eigenvalue;
  bool negative_eigenvalue;
};

LinearEstimate linear_reconstruct(const CountRecord& counts);

/// Clips negative eigenvalues and renormalizes.
DensityMatrix project_to_physical(const CMatrix& hermitian);

struct MleOptions {
  double gradient_tolerance = 1e-8;  // on max |dL/dtheta| divided by total counts
  int max_iterations = 10000;
};

struct ReconstructionResult {
  DensityMatrix rho;
  double log_likelihood;
  int iterations;
  bool converged;
  double gradient_norm;
  std::vector<double> history;  // log-likelihood after each accepted step
};

/// Poisson log-likelihood sum_v [n_v ln mu_v - mu_v], mu_v = N Tr[P_v rho].
double log_likelihood(const CountRecord& counts, const DensityMatrix& rho);

/// Maximizes the Poisson likelihood over rho = G^dag G / Tr, G lower
/// triangular with real diagonal. Starts from `init` when given, otherwise
/// from the PSD projection of the linear estimate.
ReconstructionResult mle_reconstruct(const CountRecord& counts,
                                     std::optional<DensityMatrix> init = std::nullopt,
                                     const MleOptions& options = {});

/// Cholesky-style parameter vector for rho (full rank required) and back.
Eigen::VectorXd cholesky_parameters(const DensityMatrix& rho);
DensityMatrix from_cholesky_parameters(const Eigen::VectorXd& theta, Eigen::Index dim);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MonteCarloSummary {
  MetricStats fidelity;
  MetricStats tangle;
  MetricStats linear_entropy;
  int samples = 0;
  int non_converged = 0;
};

/// Resamples every setting as Poisson(observed count), reconstructs each
/// resample by MLE, and summarizes the quality metrics against `target`.
MonteCarloSummary monte_carlo_errors(const CountRecord& counts, const Target& target, int n_samples,
                                     std::uint64_t seed, const MleOptions& options = {});

/// (1 - p) rho + p I/d.
DensityMatrix depolarizing(const DensityMatrix& rho, double p);

}  // namespace sorsp
