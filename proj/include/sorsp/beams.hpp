// Transverse fields of spin-orbit states at the beam waist, local Stokes
// parameters, and the pinhole-scanning polarization tomography.
//
// Mode mapping (waist plane, no propagation):
//   |l> -> LG_0^{+1},   |r> -> -LG_0^{-1}
//   LG_0^{+-1}(x, y) = sqrt(2/pi)/w * sqrt2 (x +- i y)/w * exp(-(x^2+y^2)/w^2)
// With |h>, |v> as in states.hpp, h becomes i times a mode odd in y and v
// i times the same mode odd in x, so (Hv+Vh)/sqrt2 is radial and
// (Hh-Vv)/sqrt2 azimuthal.
// Stokes: S3 = 2 Im(E_H^* E_V), positive for |R> = (|H> + i|V>)/sqrt2.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sorsp/hilbert.hpp"

namespace sorsp {

struct GridSpec {
  int nx = 16;
  int ny = 16;
  double step = 0.2;   // mm
  double dx = 0.0;     // beam center in grid coordinates, mm
  double dy = 0.0;
  double waist = 1.15; // mm

  void validate() const;
  double x(int i) const { return (i - 0.5 * (nx - 1)) * step; }
  double y(int j) const { return (j - 0.5 * (ny - 1)) * step; }
  double half_width_x() const { return 0.5 * (nx - 1) * step; }
  double half_width_y() const { return 0.5 * (ny - 1) * step; }
};

/// Unit-normalized LG_0^{l} at the waist, l in {-1, 0, +1}; (x, y) relative to the beam axis.
cplx lg_amplitude(int l_index, double x, double y, double waist);

/// (m_l, m_r): the transverse amplitudes carried by |l> and |r>.
Eigen::Vector2cd orbit_modes(double x, double y, double waist);

/// Jones vector (E_H, E_V) of a pure spin-orbit state at (x, y) relative to the beam axis.
Eigen::Vector2cd jones_at(const Ket& state, double x, double y, double waist);

/// Local polarization coherency J_pq = <E_p E_q^*> of a (possibly mixed) state.
Eigen::Matrix2cd coherency_at(const CMatrix& rho, double x, double y, double waist);

struct TransverseField {
  GridSpec grid;
  Eigen::Matrix2cd coefficients;             // rows H, V; columns l, r
  std::vector<Eigen::Vector2cd> jones;       // row-major, index j * nx + i

  const Eigen::Vector2cd& at(int i, int j) const {
    return jones[static_cast<std::size_t>(j * grid.nx + i)];
  }
};

TransverseField field_of_state(const PureState& state, const GridSpec& grid);

struct PolarizationSample {
  double x = 0.0;
  double y = 0.0;
  std::array<double, 4> stokes{};
  double orientation = 0.0;  // radians, in (-pi/2, pi/2]
  double ellipticity = 0.0;  // minor/major with handedness sign, in [-1, 1]
  double dop = 0.0;
  bool determinate = true;
};

std::array<double, 4> stokes_from_jones(const Eigen::Vector2cd& e);
std::array<double, 4> stokes_from_coherency(const Eigen::Matrix2cd& j);
PolarizationSample sample_from_stokes(double x, double y, const std::array<double, 4>& s);
Eigen::Matrix2cd polarization_rho_from_stokes(const std::array<double, 4>& s);

/// Evaluates the field analytically at a grid-frame position inside the grid bounds.
PolarizationSample stokes_at(const TransverseField& field, double x, double y);
/// Samples at every grid node.
std::vector<PolarizationSample> field_samples(const TransverseField& field);

inline constexpr double kIndeterminateFraction = 1e-6;

struct ScanOptions {
  double pinhole_diameter = 0.5;      // mm
  double counts_per_projection = 0.0; // expected counts at peak; 0 = noiseless
  std::uint64_t seed = 0;
};

struct ScanPoint {
  PolarizationSample sample;
  std::array<double, 6> intensity{};  // H V D A R L, pinhole-integrated
  std::array<double, 6> counts{};     // simulated counts, or expected values when noiseless
  std::optional<Eigen::Matrix2cd> rho;  // reconstructed polarization state
};

struct ScanResult {
  GridSpec grid;
  ScanOptions options;
  double peak_s0 = 0.0;
  std::vector<ScanPoint> points;  // row-major
};

/// Pinhole-integrated coherency at a grid-frame point.
Eigen::Matrix2cd pinhole_coherency(const CMatrix& rho, const GridSpec& grid, double x, double y,
                                   double diameter);

ScanResult pinhole_scan(const DensityMatrix& rho, const GridSpec& grid, const ScanOptions& options);

struct ProfileFidelity {
  double mean = 0.0;
  double stddev = 0.0;
  double weighted_mean = 0.0;
  double weighted_stddev = 0.0;
  int points = 0;
};

/// Per-point fidelity of the reconstructed polarization against a noiseless
/// pinhole scan of `ideal` on the same grid; indeterminate points excluded.
ProfileFidelity profile_fidelity(const ScanResult& measured, const DensityMatrix& ideal);
ProfileFidelity profile_fidelity(const ScanResult& measured, const ScanResult& ideal);

struct Registration {
  double dx = 0.0;
  double dy = 0.0;
  double objective = 0.0;
  bool degenerate = false;
  double lattice_step = 0.0;
};

/// Searches beam-center offsets on a step/4 lattice within +-2 grid steps,
/// maximizing the intensity-weighted mean fidelity with the ideal scan.
Registration register_center(const ScanResult& measured, const DensityMatrix& ideal);

}  // namespace sorsp
