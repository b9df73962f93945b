#include "sorsp/beams.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "sorsp/metrics.hpp"
#include "sorsp/rng.hpp"
#include "sorsp/tomography.hpp"

namespace sorsp {

namespace {

using std::numbers::pi;

// 4-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 4> kGlNodes = {-0.8611363115940526, -0.3399810435848563,
                                            0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGlWeights = {0.3478548451374538, 0.6521451548625461,
                                              0.6521451548625461, 0.3478548451374538};
constexpr int kAngular = 8;

void require_dim4(Eigen::Index d, const char* what) {
  if (d != 4) throw std::invalid_argument(fmt::format("{}: expected a 4-dim spin-orbit state, got {}", what, d));
}

Eigen::Matrix2cd coefficient_matrix(const Ket& state) {
  Eigen::Matrix2cd c;
  c << state[0], state[1], state[2], state[3];
  return c;
}

// Polarization density matrix from the six projection values by exact linear
// inversion on the polarization setting catalog.
Eigen::Matrix2cd invert_projections(const std::array<double, 6>& values) {
  CountRecord rec;
  rec.settings = polarization_catalog();
  rec.counts.assign(values.begin(), values.end());
  rec.rate = 1.0;
  rec.acquisition_time = 1.0;
  return project_to_physical(linear_reconstruct(rec).rho).matrix();
}

std::array<double, 6> projections(const Eigen::Matrix2cd& j) {
  std::array<double, 6> out{};
  const auto& cat = polarization_catalog();
  for (std::size_t k = 0; k < 6; ++k) {
    out[k] = std::max((cat[k].projector.matrix() * j).trace().real(), 0.0);
  }
  return out;
}

std::array<double, 4> stokes_of_rho(const Eigen::Matrix2cd& rho, double s0) {
  return {s0, s0 * (rho(0, 0) - rho(1, 1)).real(), s0 * 2.0 * rho(0, 1).real(),
          -s0 * 2.0 * rho(0, 1).imag()};
}

double polarization_fidelity(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  return fidelity(DensityMatrix(CMatrix(a)), DensityMatrix(CMatrix(b)));
}

// Noiseless analytic profile: local polarization J/S0 at every node.
struct IdealProfile {
  std::vector<double> s0;
  std::vector<std::optional<Eigen::Matrix2cd>> rho;
};

IdealProfile ideal_profile(const CMatrix& rho, const GridSpec& grid, double diameter) {
  IdealProfile p;
  const std::size_t n = static_cast<std::size_t>(grid.nx * grid.ny);
  p.s0.resize(n);
  std::vector<Eigen::Matrix2cd> js(n);
  double peak = 0.0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * grid.nx + i);
      js[k] = pinhole_coherency(rho, grid, grid.x(i), grid.y(j), diameter);
      p.s0[k] = js[k].trace().real();
      peak = std::max(peak, p.s0[k]);
    }
  p.rho.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    if (p.s0[k] >= kIndeterminateFraction * peak && p.s0[k] > 0.0) p.rho[k] = js[k] / p.s0[k];
  return p;
}

ProfileFidelity compare(const ScanResult& measured, const std::vector<std::optional<Eigen::Matrix2cd>>& ideal,
                        const std::vector<double>& weights) {
  std::vector<double> f, w;
  for (std::size_t k = 0; k < measured.points.size(); ++k) {
    const auto& pt = measured.points[k];
    if (!pt.sample.determinate || !pt.rho || !ideal[k]) continue;
    f.push_back(polarization_fidelity(*pt.rho, *ideal[k]));
    w.push_back(weights[k]);
  }
  ProfileFidelity out;
  out.points = static_cast<int>(f.size());
  if (f.empty()) return out;
  double sw = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    out.mean += f[k];
    out.weighted_mean += w[k] * f[k];
    sw += w[k];
  }
  out.mean /= static_cast<double>(f.size());
  out.weighted_mean = sw > 0.0 ? out.weighted_mean / sw : out.mean;
  double ss = 0.0, wss = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    ss += (f[k] - out.mean) * (f[k] - out.mean);
    wss += w[k] * (f[k] - out.weighted_mean) * (f[k] - out.weighted_mean);
  }
  out.stddev = f.size() > 1 ? std::sqrt(ss / static_cast<double>(f.size() - 1)) : 0.0;
  out.weighted_stddev = sw > 0.0 ? std::sqrt(wss / sw) : 0.0;
  return out;
}

}  // namespace

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument(fmt::format("GridSpec: need nx, ny >= 2, got {}x{}", nx, ny));
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument(fmt::format("GridSpec: step {} must be positive", step));
  if (!(waist > 0.0) || !std::isfinite(waist)) throw std::invalid_argument(fmt::format("GridSpec: waist {} must be positive", waist));
  if (!std::isfinite(dx) || !std::isfinite(dy)) throw std::invalid_argument("GridSpec: non-finite origin offset");
}

cplx lg_amplitude(int l_index, double x, double y, double waist) {
  if (!(waist > 0.0)) throw std::invalid_argument("lg_amplitude: waist must be positive");
  const double norm = std::sqrt(2.0 / pi) / waist;
  const double g = std::exp(-(x * x + y * y) / (waist * waist));
  switch (l_index) {
    case 0: return norm * g;
    case 1: return norm * std::sqrt(2.0) / waist * cplx(x, y) * g;
    case -1: return norm * std::sqrt(2.0) / waist * cplx(x, -y) * g;
    default: throw std::invalid_argument(fmt::format("lg_amplitude: l_index {} not in {{-1, 0, 1}}", l_index));
  }
}

Eigen::Vector2cd orbit_modes(double x, double y, double waist) {
  return {lg_amplitude(1, x, y, waist), -lg_amplitude(-1, x, y, waist)};
}

Eigen::Vector2cd jones_at(const Ket& state, double x, double y, double waist) {
  require_dim4(state.size(), "jones_at");
  return coefficient_matrix(state) * orbit_modes(x, y, waist);
}

Eigen::Matrix2cd coherency_at(const CMatrix& rho, double x, double y, double waist) {
  require_dim4(rho.rows(), "coherency_at");
  const Eigen::Vector2cd m = orbit_modes(x, y, waist);
  Eigen::Matrix2cd j = Eigen::Matrix2cd::Zero();
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (int o = 0; o < 2; ++o)
        for (int o2 = 0; o2 < 2; ++o2) j(p, q) += rho(2 * p + o, 2 * q + o2) * m[o] * std::conj(m[o2]);
  return j;
}

TransverseField field_of_state(const PureState& state, const GridSpec& grid) {
  grid.validate();
  require_dim4(state.dim(), "field_of_state");
  TransverseField f{grid, coefficient_matrix(state.amplitudes()), {}};
  f.jones.reserve(static_cast<std::size_t>(grid.nx * grid.ny));
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      f.jones.push_back(f.coefficients * orbit_modes(grid.x(i) - grid.dx, grid.y(j) - grid.dy, grid.waist));
  return f;
}

std::array<double, 4> stokes_from_jones(const Eigen::Vector2cd& e) {
  const cplx c = std::conj(e[0]) * e[1];
  return {std::norm(e[0]) + std::norm(e[1]), std::norm(e[0]) - std::norm(e[1]), 2.0 * c.real(),
          2.0 * c.imag()};
}

std::array<double, 4> stokes_from_coherency(const Eigen::Matrix2cd& j) {
  return {(j(0, 0) + j(1, 1)).real(), (j(0, 0) - j(1, 1)).real(), 2.0 * j(0, 1).real(),
          -2.0 * j(0, 1).imag()};
}

PolarizationSample sample_from_stokes(double x, double y, const std::array<double, 4>& s) {
  PolarizationSample out;
  out.x = x;
  out.y = y;
  out.stokes = s;
  const double sp = std::sqrt(s[1] * s[1] + s[2] * s[2] + s[3] * s[3]);
  out.dop = s[0] > 0.0 ? std::min(sp / s[0], 1.0) : 0.0;
  out.orientation = 0.5 * std::atan2(s[2], s[1]);
  out.ellipticity = sp > 0.0 ? std::tan(0.5 * std::asin(std::clamp(s[3] / sp, -1.0, 1.0))) : 0.0;
  return out;
}

Eigen::Matrix2cd polarization_rho_from_stokes(const std::array<double, 4>& s) {
  if (!(s[0] > 0.0)) throw std::invalid_argument("polarization_rho_from_stokes: S0 must be positive");
  Eigen::Matrix2cd r;
  r << 0.5 * (s[0] + s[1]), 0.5 * cplx(s[2], -s[3]), 0.5 * cplx(s[2], s[3]), 0.5 * (s[0] - s[1]);
  return r / s[0];
}

PolarizationSample stokes_at(const TransverseField& field, double x, double y) {
  const auto& g = field.grid;
  const double tol = 1e-12 * g.step;
  if (std::abs(x) > g.half_width_x() + tol || std::abs(y) > g.half_width_y() + tol) {
    throw std::out_of_range(fmt::format("stokes_at: ({}, {}) mm lies outside the grid", x, y));
  }
  const Eigen::Vector2cd e = field.coefficients * orbit_modes(x - g.dx, y - g.dy, g.waist);
  return sample_from_stokes(x, y, stokes_from_jones(e));
}

std::vector<PolarizationSample> field_samples(const TransverseField& field) {
  std::vector<PolarizationSample> out;
  out.reserve(field.jones.size());
  double peak = 0.0;
  for (int j = 0; j < field.grid.ny; ++j)
    for (int i = 0; i < field.grid.nx; ++i) {
      out.push_back(sample_from_stokes(field.grid.x(i), field.grid.y(j), stokes_from_jones(field.at(i, j))));
      peak = std::max(peak, out.back().stokes[0]);
    }
  for (auto& s : out) s.determinate = s.stokes[0] >= kIndeterminateFraction * peak && s.stokes[0] > 0.0;
  return out;
}

Eigen::Matrix2cd pinhole_coherency(const CMatrix& rho, const GridSpec& grid, double x, double y,
                                   double diameter) {
  if (!(diameter > 0.0)) throw std::invalid_argument("pinhole_coherency: diameter must be positive");
  const double a = 0.5 * diameter;
  Eigen::Matrix2cd j = Eigen::Matrix2cd::Zero();
  double wsum = 0.0;
  for (std::size_t r = 0; r < kGlNodes.size(); ++r) {
    const double rad = 0.5 * a * (1.0 + kGlNodes[r]);
    const double wr = kGlWeights[r] * 0.5 * a * rad;
    for (int k = 0; k < kAngular; ++k) {
      const double t = (k + 0.5) * 2.0 * pi / kAngular;
      const double w = wr * 2.0 * pi / kAngular;
      j += w * coherency_at(rho, x + rad * std::cos(t) - grid.dx, y + rad * std::sin(t) - grid.dy, grid.waist);
      wsum += w;
    }
  }
  return j / wsum;
}

ScanResult pinhole_scan(const DensityMatrix& rho, const GridSpec& grid, const ScanOptions& options) {
  grid.validate();
  require_dim4(rho.dim(), "pinhole_scan");
  if (!(options.pinhole_diameter > 0.0)) {
    throw std::invalid_argument(fmt::format("pinhole_scan: pinhole diameter {} must be positive", options.pinhole_diameter));
  }
  if (!(options.counts_per_projection >= 0.0) || !std::isfinite(options.counts_per_projection)) {
    throw std::invalid_argument("pinhole_scan: counts_per_projection must be >= 0");
  }
  ScanResult res{grid, options, 0.0, {}};
  const std::size_t n = static_cast<std::size_t>(grid.nx * grid.ny);
  std::vector<Eigen::Matrix2cd> js(n);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * grid.nx + i);
      js[k] = pinhole_coherency(rho.matrix(), grid, grid.x(i), grid.y(j), options.pinhole_diameter);
      res.peak_s0 = std::max(res.peak_s0, js[k].trace().real());
    }
  if (!(res.peak_s0 > 0.0)) throw std::domain_error("pinhole_scan: no intensity anywhere on the grid");

  const bool noisy = options.counts_per_projection > 0.0;
  const double scale = noisy ? options.counts_per_projection / (0.5 * res.peak_s0) : 0.0;
  res.points.reserve(n);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j * grid.nx + i);
      ScanPoint pt;
      const double s0 = js[k].trace().real();
      pt.intensity = projections(js[k]);
      pt.sample.x = grid.x(i);
      pt.sample.y = grid.y(j);
      pt.sample.determinate = s0 >= kIndeterminateFraction * res.peak_s0 && s0 > 0.0;
      if (noisy) {
        std::mt19937_64 rng(derive_seed(options.seed, k));
        for (std::size_t p = 0; p < 6; ++p) pt.counts[p] = static_cast<double>(poisson(rng, scale * pt.intensity[p]));
      } else {
        pt.counts = pt.intensity;
      }
      double total = 0.0;
      for (double c : pt.counts) total += c;
      if (!(total > 0.0)) pt.sample.determinate = false;
      if (!pt.sample.determinate) {
        pt.sample.stokes = {s0, 0.0, 0.0, 0.0};
        res.points.push_back(pt);
        continue;
      }
      Eigen::Matrix2cd local;
      double s0_est = s0;
      if (noisy) {
        CountRecord rec;
        rec.settings = polarization_catalog();
        rec.counts.assign(pt.counts.begin(), pt.counts.end());
        // Every ket has one orthogonal partner in the catalog, so the summed
        // rate is 3N regardless of rho and N only fixes the overall scale.
        rec.rate = total / 3.0;
        rec.acquisition_time = 1.0;
        local = mle_reconstruct(rec).rho.matrix();
        s0_est = total / 3.0 / scale;
      } else {
        local = invert_projections(pt.counts);
      }
      pt.rho = local;
      const bool keep = pt.sample.determinate;
      pt.sample = sample_from_stokes(pt.sample.x, pt.sample.y, stokes_of_rho(local, s0_est));
      pt.sample.determinate = keep;
      res.points.push_back(pt);
    }
  return res;
}

ProfileFidelity profile_fidelity(const ScanResult& measured, const ScanResult& ideal) {
  if (measured.points.size() != ideal.points.size()) {
    throw std::invalid_argument("profile_fidelity: scans have different grids");
  }
  std::vector<std::optional<Eigen::Matrix2cd>> ref;
  std::vector<double> w;
  for (const auto& p : ideal.points) {
    ref.push_back(p.sample.determinate ? p.rho : std::nullopt);
    w.push_back(p.sample.stokes[0]);
  }
  ProfileFidelity out = compare(measured, ref, w);
  if (out.points == 0) throw std::domain_error("profile_fidelity: no determinate points");
  return out;
}

ProfileFidelity profile_fidelity(const ScanResult& measured, const DensityMatrix& ideal) {
  return profile_fidelity(measured, pinhole_scan(ideal, measured.grid, {measured.options.pinhole_diameter, 0.0, 0}));
}

Registration register_center(const ScanResult& measured, const DensityMatrix& ideal) {
  require_dim4(ideal.dim(), "register_center");
  double total = 0.0;
  std::vector<double> weights;
  for (const auto& p : measured.points) {
    weights.push_back(p.sample.determinate ? p.sample.stokes[0] : 0.0);
    total += weights.back();
  }
  if (!(total > 0.0)) throw std::domain_error("register_center: scan carries no intensity");

  Registration best;
  best.lattice_step = measured.grid.step / 4.0;
  best.objective = -1.0;
  double lo = 2.0, hi = -1.0;
  for (int iy = -8; iy <= 8; ++iy)
    for (int ix = -8; ix <= 8; ++ix) {
      GridSpec g = measured.grid;
      g.dx = ix * best.lattice_step;
      g.dy = iy * best.lattice_step;
      const IdealProfile prof = ideal_profile(ideal.matrix(), g, measured.options.pinhole_diameter);
      const ProfileFidelity f = compare(measured, prof.rho, weights);
      if (f.points == 0) continue;
      const double obj = f.weighted_mean;
      lo = std::min(lo, obj);
      hi = std::max(hi, obj);
      const double r2 = g.dx * g.dx + g.dy * g.dy;
      const double best_r2 = best.dx * best.dx + best.dy * best.dy;
      if (obj > best.objective + 1e-12 || (obj > best.objective - 1e-12 && r2 < best_r2)) {
        best.objective = obj;
        best.dx = g.dx;
        best.dy = g.dy;
      }
    }
  if (hi < 0.0) throw std::domain_error("register_center: no overlapping determinate points");
  if (hi - lo < 1e-9) {
    best.dx = best.dy = 0.0;
    best.degenerate = true;
  }
  return best;
}

}  // namespace sorsp
