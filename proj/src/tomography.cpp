#include "sorsp/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sorsp/rng.hpp"

namespace sorsp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const cplx I1{0.0, 1.0};

// Orthonormal Hermitian basis of d x d matrices under <A,B> = Tr(A B):
// E_ii, (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2 for i < j.
std::vector<CMatrix> hermitian_basis(Eigen::Index d) {
  std::vector<CMatrix> basis;
  for (Eigen::Index i = 0; i < d; ++i) {
    CMatrix e = CMatrix::Zero(d, d);
    e(i, i) = 1.0;
    basis.push_back(std::move(e));
  }
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      CMatrix s = CMatrix::Zero(d, d), a = CMatrix::Zero(d, d);
      s(i, j) = s(j, i) = kInvSqrt2;
      a(i, j) = -I1 * kInvSqrt2;
      a(j, i) = I1 * kInvSqrt2;
      basis.push_back(std::move(s));
      basis.push_back(std::move(a));
    }
  return basis;
}

Eigen::MatrixXd design_matrix(std::span<const Setting> settings) {
  const Eigen::Index d = settings.front().projector.dim();
  const auto basis = hermitian_basis(d);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(settings.size()), d * d);
  for (std::size_t r = 0; r < settings.size(); ++r)
    for (std::size_t k = 0; k < basis.size(); ++k)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          (settings[r].projector.matrix() * basis[k]).trace().real();
  return m;
}

Setting make_setting(char pol, char spatial) {
  const Ket p = polarization_ket(pol);
  const Ket v = spatial ? Ket(kron(p, spatial_ket(spatial))) : p;
  return Setting{pol, spatial, Projector::onto(v)};
}

// Lower-triangular factor with real diagonal, parameterized by d^2 reals:
// d diagonal entries, then (re, im) of each strictly-lower entry, row-major.
struct CholeskyMap {
  Eigen::Index d;
  std::vector<CMatrix> elems;  // G = sum_k theta_k elems[k]

  explicit CholeskyMap(Eigen::Index dim) : d(dim) {
    for (Eigen::Index i = 0; i < d; ++i) {
      CMatrix e = CMatrix::Zero(d, d);
      e(i, i) = 1.0;
      elems.push_back(std::move(e));
    }
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        CMatrix re = CMatrix::Zero(d, d), im = CMatrix::Zero(d, d);
        re(i, j) = 1.0;
        im(i, j) = I1;
        elems.push_back(std::move(re));
        elems.push_back(std::move(im));
      }
  }

  CMatrix factor(const Eigen::VectorXd& theta) const {
    CMatrix g = CMatrix::Zero(d, d);
    for (std::size_t k = 0; k < elems.size(); ++k) g += theta[static_cast<Eigen::Index>(k)] * elems[k];
    return g;
  }

  Eigen::VectorXd params(const CMatrix& g) const {
    Eigen::VectorXd theta(d * d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) theta[k++] = g(i, i).real();
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        theta[k++] = g(i, j).real();
        theta[k++] = g(i, j).imag();
      }
    return theta;
  }

  // Real symmetric A with theta^T A theta = Tr[P G^dag G].
  Eigen::MatrixXd quadratic_form(const CMatrix& p) const {
    const Eigen::Index n = d * d;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index l = k; l < n; ++l) {
        const double v = (p * elems[static_cast<std::size_t>(k)].adjoint() *
                          elems[static_cast<std::size_t>(l)]).trace().real();
        a(k, l) = a(l, k) = v;
      }
    return a;
  }
};

struct Likelihood {
  double value;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// theta is on the unit sphere. Zero-count settings contribute -mu only.
Likelihood evaluate(const std::vector<Eigen::MatrixXd>& forms, const std::vector<double>& n,
                    double mean_total, const Eigen::VectorXd& theta, bool with_derivatives) {
  const Eigen::Index m = theta.size();
  Likelihood out{0.0, Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m)};
  for (std::size_t v = 0; v < forms.size(); ++v) {
    const Eigen::VectorXd at = forms[v] * theta;
    const double q = theta.dot(at);
    const double mu = mean_total * q;
    if (n[v] > 0.0) {
      if (mu <= 0.0) {
        out.value = -std::numeric_limits<double>::infinity();
        return out;
      }
      out.value += n[v] * std::log(mu) - mu;
    } else {
      out.value -= mu;
    }
    if (!with_derivatives) continue;
    const Eigen::VectorXd g = 2.0 * (at - q * theta);
    const Eigen::VectorXd dmu = mean_total * g;
    Eigen::MatrixXd d2mu = forms[v] - q * Eigen::MatrixXd::Identity(m, m) - theta * g.transpose() -
                           g * theta.transpose();
    d2mu *= 2.0 * mean_total;
    const double w = n[v] > 0.0 ? n[v] / mu - 1.0 : -1.0;
    out.gradient += w * dmu;
    out.hessian += w * d2mu;
    if (n[v] > 0.0) out.hessian -= (n[v] / (mu * mu)) * dmu * dmu.transpose();
  }
  return out;
}

}  // namespace

std::string Setting::label() const {
  std::string s(1, pol);
  if (spatial) s += spatial;
  return s;
}

Eigen::Vector2cd polarization_ket(char pol) {
  Eigen::Vector2cd v;
  switch (pol) {
    case 'H': v << 1.0, 0.0; break;
    case 'V': v << 0.0, 1.0; break;
    case 'D': v << kInvSqrt2, kInvSqrt2; break;
    case 'A': v << kInvSqrt2, -kInvSqrt2; break;
    case 'R': v << kInvSqrt2, I1 * kInvSqrt2; break;
    case 'L': v << kInvSqrt2, -I1 * kInvSqrt2; break;
    default: throw std::invalid_argument(fmt::format("unknown polarization setting '{}'", pol));
  }
  return v;
}

Eigen::Vector2cd spatial_ket(char mode) {
  Eigen::Vector2cd v;
  switch (mode) {
    case 'l': v << 1.0, 0.0; break;
    case 'r': v << 0.0, 1.0; break;
    case 'h': v << kInvSqrt2, kInvSqrt2; break;
    case 'v': v << I1 * kInvSqrt2, -I1 * kInvSqrt2; break;
    case 'd': v << kInvSqrt2, I1 * kInvSqrt2; break;
    case 'a': v << kInvSqrt2, -I1 * kInvSqrt2; break;
    default: throw std::invalid_argument(fmt::format("unknown spatial setting '{}'", mode));
  }
  return v;
}

const std::vector<Setting>& setting_catalog() {
  static const std::vector<Setting> catalog = [] {
    std::vector<Setting> out;
    for (char p : std::string("HVDARL"))
      for (char s : std::string("lrhvda")) out.push_back(make_setting(p, s));
    return out;
  }();
  return catalog;
}

const std::vector<Setting>& polarization_catalog() {
  static const std::vector<Setting> catalog = [] {
    std::vector<Setting> out;
    for (char p : std::string("HVDARL")) out.push_back(make_setting(p, 0));
    return out;
  }();
  return catalog;
}

const Setting& setting_by_label(const std::string& label) {
  const auto& cat = label.size() == 1 ? polarization_catalog() : setting_catalog();
  for (const auto& s : cat)
    if (s.label() == label) return s;
  throw std::invalid_argument(fmt::format("unknown tomography setting '{}'", label));
}

int design_rank(std::span<const Setting> settings) {
  if (settings.empty()) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(design_matrix(settings));
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

double CountRecord::total() const {
  double t = 0.0;
  for (double c : counts) t += c;
  return t;
}

void CountRecord::validate() const {
  if (settings.empty()) throw std::invalid_argument("CountRecord: no settings");
  if (counts.size() != settings.size()) {
    throw std::invalid_argument(fmt::format("CountRecord: {} counts for {} settings", counts.size(),
                                            settings.size()));
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] >= 0.0) || !std::isfinite(counts[i])) {
      throw std::invalid_argument(
          fmt::format("CountRecord: invalid count {} for setting {}", counts[i], settings[i].label()));
    }
    if (settings[i].projector.dim() != settings.front().projector.dim()) {
      throw std::invalid_argument("CountRecord: settings of mixed dimension");
    }
  }
  if (!(rate > 0.0) || !(acquisition_time > 0.0)) {
    throw std::invalid_argument(fmt::format("CountRecord: rate {} and acquisition time {} must be positive",
                                            rate, acquisition_time));
  }
}

std::vector<double> expected_counts(const DensityMatrix& rho, std::span<const Setting> settings,
                                    double mean_total) {
  std::vector<double> out;
  out.reserve(settings.size());
  for (const auto& s : settings) {
    if (s.projector.dim() != rho.dim()) throw std::invalid_argument("expected_counts: dimension mismatch");
    const double p = (s.projector.matrix() * rho.matrix()).trace().real();
    out.push_back(mean_total * std::max(p, 0.0));
  }
  return out;
}

CountRecord noiseless_counts(const DensityMatrix& rho, std::span<const Setting> settings, double rate,
                             double acquisition_time) {
  CountRecord rec{{settings.begin(), settings.end()}, {}, acquisition_time, rate};
  rec.counts = expected_counts(rho, settings, rec.mean_total());
  rec.validate();
  return rec;
}

CountRecord simulate_counts(const DensityMatrix& rho, std::span<const Setting> settings, double rate,
                            double acquisition_time, std::uint64_t seed, const NoiseChannel& noise) {
  if (!(rate * acquisition_time > 0.0)) {
    throw std::invalid_argument("simulate_counts: mean_total must be positive");
  }
  const DensityMatrix noisy = noise ? noise(rho) : rho;
  CountRecord rec{{settings.begin(), settings.end()}, {}, acquisition_time, rate};
  std::mt19937_64 rng(seed);
  for (double mu : expected_counts(noisy, settings, rec.mean_total()))
    rec.counts.push_back(static_cast<double>(poisson(rng, mu)));
  return rec;
}

LinearEstimate linear_reconstruct(const CountRecord& counts) {
  counts.validate();
  const Eigen::Index d = counts.dim();
  const Eigen::MatrixXd m = design_matrix(counts.settings);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  if (qr.rank() < d * d) {
    throw std::invalid_argument(
        fmt::format("linear_reconstruct: design rank {} below {}", qr.rank(), d * d));
  }
  Eigen::VectorXd y(m.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = counts.counts[static_cast<std::size_t>(i)] / counts.mean_total();
  const Eigen::VectorXd x = qr.solve(y);
  const auto basis = hermitian_basis(d);
  CMatrix rho = CMatrix::Zero(d, d);
  for (std::size_t k = 0; k < basis.size(); ++k) rho += x[static_cast<Eigen::Index>(k)] * basis[k];
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw std::domain_error("linear_reconstruct: non-positive trace");
  rho /= tr;
  const double min_ev = hermitian_eigenvalues(rho)[0];
  return {rho, min_ev, min_ev < -kEigenvalueFloor};
}

DensityMatrix project_to_physical(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (hermitian + hermitian.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const double s = ev.sum();
  if (!(s > 0.0)) throw std::domain_error("project_to_physical: no positive eigenvalues");
  ev /= s;
  CMatrix rho = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

Eigen::VectorXd cholesky_parameters(const DensityMatrix& rho) {
  const Eigen::Index d = rho.dim();
  // Reverse-order Cholesky: J rho J = L L^dag gives rho = G^dag G, G = (J L J)^dag lower.
  const CMatrix flipped = rho.matrix().colwise().reverse().rowwise().reverse();
  Eigen::LLT<CMatrix> llt(flipped);
  if (llt.info() != Eigen::Success) throw std::domain_error("cholesky_parameters: rho is not full rank");
  const CMatrix l = llt.matrixL();
  const CMatrix g = CMatrix(l.colwise().reverse().rowwise().reverse()).adjoint();
  Eigen::VectorXd theta = CholeskyMap(d).params(g);
  return theta / theta.norm();
}

DensityMatrix from_cholesky_parameters(const Eigen::VectorXd& theta, Eigen::Index dim) {
  if (theta.size() != dim * dim) throw std::invalid_argument("from_cholesky_parameters: size mismatch");
  const CMatrix g = CholeskyMap(dim).factor(theta);
  CMatrix rho = g.adjoint() * g;
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

double log_likelihood(const CountRecord& counts, const DensityMatrix& rho) {
  counts.validate();
  const auto mu = expected_counts(rho, counts.settings, counts.mean_total());
  double l = 0.0;
  for (std::size_t v = 0; v < mu.size(); ++v) {
    if (counts.counts[v] > 0.0) {
      if (mu[v] <= 0.0) return -std::numeric_limits<double>::infinity();
      l += counts.counts[v] * std::log(mu[v]);
    }
    l -= mu[v];
  }
  return l;
}

ReconstructionResult mle_reconstruct(const CountRecord& counts, std::optional<DensityMatrix> init,
                                     const MleOptions& options) {
  counts.validate();
  const double total = counts.total();
  if (!(total > 0.0)) throw std::invalid_argument("mle_reconstruct: all counts are zero");
  const Eigen::Index d = counts.dim();
  const CholeskyMap map(d);
  std::vector<Eigen::MatrixXd> forms;
  forms.reserve(counts.settings.size());
  for (const auto& s : counts.settings) forms.push_back(map.quadratic_form(s.projector.matrix()));

  if (!init) {
    try {
      init = project_to_physical(linear_reconstruct(counts).rho);
    } catch (const std::exception&) {
      init = DensityMatrix::maximally_mixed(d);
    }
  }
  // Keep the start strictly inside the cone so the factor is full rank and
  // every observed setting has positive rate.
  const double mix = 1e-3;
  const DensityMatrix start(((1.0 - mix) * init->matrix() +
                             mix * CMatrix::Identity(d, d) / static_cast<double>(d)).eval());
  Eigen::VectorXd theta = cholesky_parameters(start);

  const double n_mean = counts.mean_total();
  Likelihood cur = evaluate(forms, counts.counts, n_mean, theta, true);
  double lambda = 1e-3 * std::max(1.0, cur.hessian.diagonal().cwiseAbs().maxCoeff());
  ReconstructionResult res{from_cholesky_parameters(theta, d), cur.value, 0, false, 0.0, {cur.value}};

  const Eigen::Index m = theta.size();
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it;
    res.gradient_norm = cur.gradient.cwiseAbs().maxCoeff() / total;
    if (res.gradient_norm < options.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // Damped Newton ascent: (-H + lambda I) step = grad.
    Eigen::MatrixXd sys = -cur.hessian + lambda * Eigen::MatrixXd::Identity(m, m);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
    const bool pd = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
    if (!pd) {
      lambda = std::max(lambda * 10.0, 1e-12);
      continue;
    }
    Eigen::VectorXd step = ldlt.solve(cur.gradient);
    step -= theta.dot(step) * theta;
    Eigen::VectorXd trial = theta + step;
    trial /= trial.norm();
    Likelihood next = evaluate(forms, counts.counts, n_mean, trial, true);
    if (std::isfinite(next.value) && next.value >= cur.value) {
      theta = trial;
      cur = std::move(next);
      res.history.push_back(cur.value);
      lambda = std::max(lambda * 0.3, 1e-14);
    } else {
      lambda = lambda * 10.0;
      if (lambda > 1e300) break;
    }
  }
  if (!res.converged) {
    res.iterations = options.max_iterations;
    res.gradient_norm = cur.gradient.cwiseAbs().maxCoeff() / total;
    res.converged = res.gradient_norm < options.gradient_tolerance;
  }
  res.rho = from_cholesky_parameters(theta, d);
  res.log_likelihood = cur.value;
  return res;
}

MonteCarloSummary monte_carlo_errors(const CountRecord& counts, const Target& target, int n_samples,
                                     std::uint64_t seed, const MleOptions& options) {
  counts.validate();
  if (n_samples < 2) throw std::invalid_argument("monte_carlo_errors: need at least 2 samples");
  std::vector<QualityReport> reports;
  MonteCarloSummary out;
  const ReconstructionResult base = mle_reconstruct(counts, std::nullopt, options);
  for (int s = 0; s < n_samples; ++s) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    CountRecord resampled = counts;
    for (auto& c : resampled.counts) c = static_cast<double>(poisson(rng, c));
    if (!(resampled.total() > 0.0)) {
      ++out.non_converged;
      continue;
    }
    const ReconstructionResult r = mle_reconstruct(resampled, base.rho, options);
    if (!r.converged) ++out.non_converged;
    reports.push_back(quality_report(r.rho, target));
  }
  out.samples = static_cast<int>(reports.size());
  auto stats = [&](auto field) {
    MetricStats st;
    for (const auto& r : reports) st.mean += field(r);
    st.mean /= static_cast<double>(reports.size());
    double ss = 0.0;
    for (const auto& r : reports) ss += (field(r) - st.mean) * (field(r) - st.mean);
    st.stddev = reports.size() > 1 ? std::sqrt(ss / static_cast<double>(reports.size() - 1)) : 0.0;
    return st;
  };
  out.fidelity = stats([](const QualityReport& r) { return r.fidelity; });
  out.tangle = stats([](const QualityReport& r) { return r.tangle; });
  out.linear_entropy = stats([](const QualityReport& r) { return r.linear_entropy; });
  return out;
}

DensityMatrix depolarizing(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("depolarizing: p={} outside [0, 1]", p));
  const Eigen::Index d = rho.dim();
  CMatrix m = (1.0 - p) * rho.matrix() + p * CMatrix::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix(std::move(m));
}

}  // namespace sorsp
