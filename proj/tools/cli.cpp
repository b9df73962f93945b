#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sorsp/beams.hpp"
#include "sorsp/metrics.hpp"
#include "sorsp/protocol.hpp"
#include "sorsp/render.hpp"
#include "sorsp/rng.hpp"
#include "sorsp/serialize.hpp"
#include "sorsp/states.hpp"
#include "sorsp/tomography.hpp"

namespace sorsp::cli {

namespace fs = std::filesystem;

namespace {

// Seed purposes; child seed = derive_seed(master, purpose).
constexpr std::uint64_t kSeedProtocol = 1;
constexpr std::uint64_t kSeedCounts = 2;
constexpr std::uint64_t kSeedMonteCarlo = 3;
constexpr std::uint64_t kSeedScan = 4;

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", what, s));
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::map<std::string, std::string> parse_assignments(const std::string& s, const std::set<std::string>& keys,
                                                     const std::string& what) {
  std::map<std::string, std::string> out;
  for (const auto& item : split(s, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}: expected key=value, got '{}'", what, item));
    const std::string key = item.substr(0, eq);
    if (!keys.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", what, key));
    if (out.contains(key)) throw ConfigError(fmt::format("{}: key '{}' given twice", what, key));
    out[key] = item.substr(eq + 1);
  }
  return out;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

Target target_of(const NamedState& n) {
  if (n.pure) return Target{*n.pure};
  return Target{n.rho};
}

// Output files of one run, each written via a temporary and a rename.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    write_raw(name, content);
    files_.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a", hex64(fnv1a(content))}});
  }

  void write_raw(const std::string& name, const std::string& content) const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
    const fs::path target = dir_ / name;
    const fs::path tmp = dir_ / (name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
      f << content;
      f.flush();
      if (!f) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError(fmt::format("cannot move '{}' into place: {}", target.string(), ec.message()));
  }

  const json& files() const { return files_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot read '{}'", path));
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Options

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "sorsp-out";
  std::string config;
  std::string format = "json";
};

struct RespOpts {
  std::string target;
  std::string family;
  std::string preset;
  std::string arbitrary;
  bool heralded = false;
  std::string mixed;
  double dephase = 0.0;
};

struct TomoOpts {
  std::string state = "phi+";
  std::string counts;
  std::string target;
  double mean_total = 1e6;
  double acquisition_s = 1.0;
  bool noiseless = false;
  double noise = 0.0;
  int mc = 0;
  std::string method = "mle";
  int max_iterations = 10000;
};

struct BeamOpts {
  std::string state = "radial";
  int nx = 16;
  int ny = 16;
  double step = 0.2;
  double waist = 1.15;
  double pinhole = 0.5;
  double counts_per_projection = 0.0;
  double noise = 0.0;
  std::string offset = "0,0";
  bool reg = false;
  bool analytic = false;
  std::string style = "ellipse-grid";
};

struct ReportOpts {
  std::vector<std::string> targets;
  double mean_total = 1e6;
  bool noiseless = false;
  double noise = 0.0;
  int mc = 0;
};

struct RunContext {
  Globals g;
  std::uint64_t seed = 0;
  std::string seed_source;
  std::ostream* out = nullptr;
  Artifacts* artifacts = nullptr;
};

// ---------------------------------------------------------------------------
// resp

FamilyParams parse_family(const std::string& preset, const std::string& spec) {
  FamilyParams p = preset == "lc1" ? lc1_family_params() : canonical_family_params();
  const auto kv = parse_assignments(spec, {"alpha", "beta", "eta", "theta", "phi"}, "--family");
  for (const auto& [k, v] : kv) {
    const double a = parse_angle(v);
    if (k == "alpha") p.alpha = a;
    if (k == "beta") p.beta = a;
    if (k == "eta") p.eta = a;
    if (k == "theta") p.theta = a;
    if (k == "phi") p.phi = a;
  }
  return p;
}

AmplitudeQuad parse_quad(const std::string& spec) {
  const auto kv = parse_assignments(spec, {"a", "b", "c", "d"}, "--arbitrary");
  auto get = [&](const char* k) { return kv.contains(k) ? parse_complex(kv.at(k)) : cplx(0.0); };
  AmplitudeQuad q{get("a"), get("b"), get("c"), get("d")};
  validate(q);
  return q;
}

// Table targets Bob's state coincides with.
json matching_named(const DensityMatrix& rho) {
  json out = json::array();
  for (const auto& n : table_targets())
    if (n.pure && fidelity(rho, *n.pure) > 1.0 - 1e-9) out.push_back(n.key);
  return out;
}

// True when the family parameters reproduce the canonical Bell conditionals.
bool canonical_equivalent(const FamilyParams& p) {
  const auto branches = bsa_project(hyperentangled_resource());
  for (std::size_t b = 0; b < 4; ++b) {
    if (overlap(family_state(kBellKinds[b], p).amplitudes(), branches[b].bob->amplitudes()) < 1.0 - 1e-10) return false;
  }
  return true;
}

void cmd_resp(const RespOpts& o, RunContext& ctx) {
  const int modes = !o.target.empty() + (!o.family.empty() || !o.preset.empty()) + !o.arbitrary.empty() + !o.mixed.empty();
  if (modes != 1) throw ConfigError("resp: give exactly one of --target, --family/--preset, --arbitrary, --mixed");
  if (o.heralded && o.arbitrary.empty()) throw ConfigError("resp: --heralded applies to --arbitrary only");
  if (!(o.dephase >= 0.0 && o.dephase <= 1.0)) throw ConfigError("resp: --dephase must lie in [0, 1]");

  const std::uint64_t seed = derive_seed(ctx.seed, kSeedProtocol);
  ProtocolTranscript t;
  std::optional<Target> target;
  json notes = json::array();
  json extra = json::object();

  if (!o.target.empty()) {
    const BellKind k = bell_kind_from_string(o.target);
    t = run_resp(k, seed);
    target = Target{spin_orbit_bell(k)};
  } else if (!o.family.empty() || !o.preset.empty()) {
    const FamilyParams p = parse_family(o.preset.empty() ? "canonical" : o.preset, o.family);
    t = run_family(p, seed);
    target = Target{family_state(kBellKinds[static_cast<std::size_t>(t.alice->outcome_index)], p)};
    extra["family"] = {{"alpha", p.alpha}, {"beta", p.beta}, {"eta", p.eta}, {"theta", p.theta}, {"phi", p.phi}};
    if (canonical_equivalent(p)) notes.push_back("parameters reproduce the canonical Bell-state preparation");
  } else if (!o.arbitrary.empty()) {
    const AmplitudeQuad q = parse_quad(o.arbitrary);
    t = run_arbitrary_resp(q, seed, o.heralded);
    if (t.success) target = Target{arbitrary_state(q)};
    else notes.push_back("heralding outcome not observed; Bob discards the photon");
  } else {
    if (o.mixed == "cc-phi") t = prepare_classically_correlated(CorrelatedSector::phi);
    else if (o.mixed == "cc-psi") t = prepare_classically_correlated(CorrelatedSector::psi);
    else t = prepare_completely_mixed();
    target = target_of(named_state(o.mixed));
  }
  t.seed = seed;

  if (o.dephase > 0.0) {
    t.bob_state = dephase_spin_orbit(bob_density(t), o.dephase);
    extra["dephasing"] = o.dephase;
  }

  json doc = versioned({{"transcript", to_json(t)}});
  for (auto& [k, v] : extra.items()) doc[k] = v;
  std::string line = fmt::format("resp: {} ", t.protocol);
  if (t.alice) line += fmt::format("outcome {} (p={:.6g}) ", t.alice->label, t.alice->probability);
  line += fmt::format("cbits={} correction='{}'", t.cbits_sent, t.correction.description);
  if (target) {
    const DensityMatrix bob = bob_density(t);
    const QualityReport r = quality_report(bob, *target);
    doc["target"] = std::visit([](const auto& s) { return to_json(s); }, *target);
    doc["report"] = to_json(r);
    doc["matches"] = matching_named(bob);
    line += fmt::format(" F={:.6f} T={:.6f} S_L={:.6f}", r.fidelity, r.tangle, r.linear_entropy);
  } else {
    doc["target"] = nullptr;
    doc["report"] = nullptr;
    line += " success=false";
  }
  doc["notes"] = notes;
  ctx.artifacts->write("resp.json", dump(doc));
  *ctx.out << line << "\n";
  for (const auto& n : notes) *ctx.out << "note: " << n.get<std::string>() << "\n";
}

// ---------------------------------------------------------------------------
// tomo and report

struct TomoRow {
  std::string key;
  QualityReport quality;
  std::optional<MonteCarloSummary> mc;

  json to_json_row() const {
    json j{{"state", key},
           {"fidelity", quality.fidelity},
           {"tangle", quality.tangle},
           {"linear_entropy", quality.linear_entropy}};
    if (mc) {
      j["fidelity_sigma"] = mc->fidelity.stddev;
      j["tangle_sigma"] = mc->tangle.stddev;
      j["linear_entropy_sigma"] = mc->linear_entropy.stddev;
    }
    j["row"] = text();
    return j;
  }

  std::string text() const {
    auto cell = [&](double v, const MetricStats* s) { return format_uncertain(v, s ? s->stddev : 0.0); };
    return fmt::format("F={:<10} T={:<10} S_L={}", cell(quality.fidelity, mc ? &mc->fidelity : nullptr),
                       cell(quality.tangle, mc ? &mc->tangle : nullptr),
                       cell(quality.linear_entropy, mc ? &mc->linear_entropy : nullptr));
  }
};

CountRecord load_counts(const std::string& path) {
  const std::string text = read_file(path);
  if (fs::path(path).extension() == ".csv") return counts_from_csv(text);
  return counts_from_json(parse_json(text, path));
}

std::string counts_artifact(const CountRecord& c, const std::string& format) {
  return format == "csv" ? counts_to_csv(c) : dump(counts_to_json(c));
}

void check_rate_options(double mean_total, double time) {
  if (!(mean_total > 0.0)) throw ConfigError("--mean-total must be positive");
  if (!(time > 0.0)) throw ConfigError("--acquisition-s must be positive");
}

void cmd_tomo(const TomoOpts& o, RunContext& ctx) {
  check_rate_options(o.mean_total, o.acquisition_s);
  if (o.mc < 0 || o.mc == 1) throw ConfigError("tomo: --mc must be 0 or at least 2");
  const std::string target_key = o.target.empty() ? o.state : o.target;
  const NamedState target = named_state(target_key);

  CountRecord counts;
  json source;
  if (!o.counts.empty()) {
    counts = load_counts(o.counts);
    source = {{"counts_file", o.counts}};
  } else {
    const DensityMatrix rho = depolarizing(named_state(o.state).rho, o.noise);
    const double rate = o.mean_total / o.acquisition_s;
    counts = o.noiseless ? noiseless_counts(rho, setting_catalog(), rate, o.acquisition_s)
                         : simulate_counts(rho, setting_catalog(), rate, o.acquisition_s,
                                           derive_seed(ctx.seed, kSeedCounts));
    source = {{"state", o.state}, {"depolarizing", o.noise}, {"mean_total", o.mean_total},
              {"acquisition_s", o.acquisition_s}, {"noiseless", o.noiseless}};
  }
  if (counts.dim() != target.rho.dim()) throw ConfigError("tomo: counts and target have different dimensions");
  ctx.artifacts->write(ctx.g.format == "csv" ? "counts.csv" : "counts.json", counts_artifact(counts, ctx.g.format));

  MleOptions mo;
  mo.max_iterations = o.max_iterations;
  json recon;
  DensityMatrix rho = DensityMatrix::maximally_mixed(counts.dim());
  if (o.method == "linear") {
    const LinearEstimate est = linear_reconstruct(counts);
    rho = project_to_physical(est.rho);
    recon = to_json(est);
    recon["physical"] = to_json(rho);
  } else {
    const ReconstructionResult r = mle_reconstruct(counts, std::nullopt, mo);
    if (!r.converged) {
      throw NumericError(fmt::format("maximum likelihood did not converge in {} iterations (gradient {:.3g})",
                                     r.iterations, r.gradient_norm));
    }
    rho = r.rho;
    recon = to_json(r);
  }
  TomoRow row{target_key, quality_report(rho, target_of(target)), std::nullopt};
  if (o.mc > 0) row.mc = monte_carlo_errors(counts, target_of(target), o.mc, derive_seed(ctx.seed, kSeedMonteCarlo), mo);

  json doc = versioned({{"source", source}, {"target", target_key}, {"reconstruction", recon},
                        {"report", to_json(row.quality)}});
  doc["monte_carlo"] = row.mc ? to_json(*row.mc) : json(nullptr);
  doc["row"] = row.text();
  ctx.artifacts->write("reconstruction.json", dump(doc));
  *ctx.out << fmt::format("{:<10} {}\n", target_key, row.text());
}

void cmd_report(const ReportOpts& o, RunContext& ctx) {
  check_rate_options(o.mean_total, 1.0);
  if (o.mc < 0 || o.mc == 1) throw ConfigError("report: --mc must be 0 or at least 2");
  std::vector<NamedState> targets;
  if (o.targets.empty()) targets = table_targets();
  else
    for (const auto& k : o.targets) targets.push_back(named_state(k));

  const std::uint64_t counts_seed = derive_seed(ctx.seed, kSeedCounts);
  const std::uint64_t mc_seed = derive_seed(ctx.seed, kSeedMonteCarlo);
  std::vector<TomoRow> rows;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& t = targets[k];
    const DensityMatrix rho = depolarizing(t.rho, o.noise);
    const CountRecord counts = o.noiseless ? noiseless_counts(rho, setting_catalog(), o.mean_total)
                                           : simulate_counts(rho, setting_catalog(), o.mean_total, 1.0,
                                                             derive_seed(counts_seed, k));
    const ReconstructionResult r = mle_reconstruct(counts);
    if (!r.converged) throw NumericError(fmt::format("report: reconstruction of {} did not converge", t.key));
    TomoRow row{t.key, quality_report(r.rho, target_of(t)), std::nullopt};
    if (o.mc > 0) row.mc = monte_carlo_errors(counts, target_of(t), o.mc, derive_seed(mc_seed, k));
    rows.push_back(row);
  }

  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.key.size());
  *ctx.out << fmt::format("{:<{}}  {}\n", "state", w, "quality");
  for (const auto& r : rows) *ctx.out << fmt::format("{:<{}}  {}\n", r.key, w, r.text());

  if (ctx.g.format == "csv") {
    std::string csv = fmt::format("# schema_version={}\nstate,F,F_sigma,T,T_sigma,S_L,S_L_sigma\n", kSchemaVersion);
    for (const auto& r : rows) {
      auto sg = [&](const MetricStats& s) { return r.mc ? s.stddev : 0.0; };
      const MetricStats none;
      csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.key, r.quality.fidelity,
                         sg(r.mc ? r.mc->fidelity : none), r.quality.tangle, sg(r.mc ? r.mc->tangle : none),
                         r.quality.linear_entropy, sg(r.mc ? r.mc->linear_entropy : none));
    }
    ctx.artifacts->write("report.csv", csv);
  } else {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(r.to_json_row());
    ctx.artifacts->write("report.json",
                         dump(versioned({{"mean_total", o.mean_total}, {"noiseless", o.noiseless},
                                         {"depolarizing", o.noise}, {"monte_carlo_samples", o.mc}, {"rows", arr}})));
  }
}

// ---------------------------------------------------------------------------
// beam

void cmd_beam(const BeamOpts& o, RunContext& ctx) {
  const NamedState state = named_state(o.state);
  if (state.rho.dim() != 4) throw ConfigError("beam: state must be a spin-orbit (4-dim) state");
  const auto off = split(o.offset, ',');
  if (off.size() != 2) throw ConfigError("beam: --offset takes x,y in mm");
  GridSpec grid;
  grid.nx = o.nx;
  grid.ny = o.ny;
  grid.step = o.step;
  grid.waist = o.waist;
  grid.dx = parse_number(off[0], "--offset");
  grid.dy = parse_number(off[1], "--offset");
  grid.validate();
  const RenderStyle style = render_style_from_string(o.style);

  json doc = versioned({{"state", o.state}, {"grid", to_json(grid)}});
  std::vector<PolarizationSample> samples;
  if (o.analytic) {
    if (!state.pure) throw ConfigError("beam: --analytic needs a pure state");
    samples = field_samples(field_of_state(*state.pure, grid));
    doc["mode"] = "analytic";
    *ctx.out << fmt::format("beam: {} analytic field on {}x{}\n", o.state, grid.nx, grid.ny);
  } else {
    const ScanOptions so{o.pinhole, o.counts_per_projection, derive_seed(ctx.seed, kSeedScan)};
    const ScanResult scan = pinhole_scan(depolarizing(state.rho, o.noise), grid, so);
    samples = scan_samples(scan);
    GridSpec assumed = grid;
    assumed.dx = assumed.dy = 0.0;
    if (o.reg) {
      const Registration reg = register_center(scan, state.rho);
      assumed.dx = reg.dx;
      assumed.dy = reg.dy;
      doc["registration"] = to_json(reg);
    }
    const ScanResult ideal = pinhole_scan(state.rho, assumed, {o.pinhole, 0.0, 0});
    const ProfileFidelity f = profile_fidelity(scan, ideal);
    doc["mode"] = "pinhole-scan";
    doc["pinhole_mm"] = o.pinhole;
    doc["counts_per_projection"] = o.counts_per_projection;
    doc["depolarizing"] = o.noise;
    doc["peak_s0"] = scan.peak_s0;
    doc["fidelity"] = to_json(f);
    *ctx.out << fmt::format("beam: {} F_mean={:.6f}({:.0e}) F_weighted={:.6f} points={}\n", o.state, f.mean, f.stddev,
                            f.weighted_mean, f.points);
    if (o.reg) *ctx.out << fmt::format("registered center: ({:.4f}, {:.4f}) mm\n", assumed.dx, assumed.dy);
  }
  ctx.artifacts->write("profile.csv", samples_csv(samples));
  ctx.artifacts->write("profile.svg", render_svg(samples, grid, style));
  doc["style"] = to_string(style);
  ctx.artifacts->write("beam.json", dump(doc));
}

// ---------------------------------------------------------------------------
// conventions

json conventions_doc() {
  const double radial = radial_identity_residual(adopted_circular_convention());
  const double resource = resource_identity_residual();
  json checks = json::array();
  checks.push_back({{"identity", "|Rr> - |Ll> = |Hv> + |Vh> (up to global phase)"},
                    {"residual", radial},
                    {"tolerance", 1e-10},
                    {"pass", radial < 1e-10}});
  checks.push_back({{"identity", "Phi+_spin (x) Psi+_orbit = phi+phi+ + phi-phi- + psi+psi+ + psi-psi-, over 2"},
                    {"residual", resource},
                    {"tolerance", 1e-12},
                    {"pass", resource < 1e-12}});
  return versioned(
      {{"single_photon_basis", photon_labels()},
       {"pair_basis", "photon A (x) photon B, index 4a + b"},
       {"bell_states",
        {{"phi+", "(Hl + Vr)/sqrt2"}, {"phi-", "(Hl - Vr)/sqrt2"}, {"psi+", "(Hr + Vl)/sqrt2"}, {"psi-", "(Hr - Vl)/sqrt2"}}},
       {"circular_polarization", {{"R", "(H + iV)/sqrt2"}, {"L", "(H - iV)/sqrt2"}}},
       {"spatial_modes", {{"h", "(l + r)/sqrt2"}, {"v", "i(l - r)/sqrt2"}, {"d", "(l + ir)/sqrt2"}, {"a", "(l - ir)/sqrt2"}}},
       {"mode_mapping", {{"l", "LG_0^{+1}"}, {"r", "-LG_0^{-1}"}}},
       {"stokes", {{"S3", "2 Im(E_H^* E_V)"}, {"handedness", "S3 > 0 for R"}}},
       {"vector_beams", {{"radial", "(Hv + Vh)/sqrt2"}, {"azimuthal", "(Hh - Vv)/sqrt2"}}},
       {"angles", "stored in radians; command-line angles carry a deg or rad suffix"},
       {"seeds", "child = derive_seed(seed, purpose); purposes 1 protocol, 2 counts, 3 monte carlo, 4 scan"},
       {"checks", checks}});
}

void cmd_conventions(RunContext& ctx) {
  const json doc = conventions_doc();
  *ctx.out << dump(doc);
  for (const auto& c : doc["checks"])
    if (!c["pass"].get<bool>()) throw NumericError(fmt::format("convention check failed: {}", c["identity"].get<std::string>()));
}

// ---------------------------------------------------------------------------
// Config injection

const std::set<std::string> kGlobalValued = {"--seed", "--out-dir", "--config", "--format"};

struct ArgScan {
  std::optional<std::size_t> subcommand;  // index into args
  std::optional<std::string> config;
  bool seed_given = false;
};

ArgScan scan_args(const std::vector<std::string>& args, const std::set<std::string>& subcommands) {
  ArgScan s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const auto eq = a.find('=');
    const std::string name = a.rfind("--", 0) == 0 ? a.substr(0, eq) : a;
    if (name == "--seed") s.seed_given = true;
    if (name == "--config") {
      if (eq != std::string::npos) s.config = a.substr(eq + 1);
      else if (i + 1 < args.size()) s.config = args[i + 1];
    }
    if (kGlobalValued.contains(name) && eq == std::string::npos) {
      ++i;
      continue;
    }
    if (!s.subcommand && subcommands.contains(a)) s.subcommand = i;
  }
  return s;
}

std::vector<std::string> config_tokens(const json& cfg, const CLI::App& app, const CLI::App* sub) {
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "schema_version") {
      if (!value.is_string()) throw SchemaError("config schema_version must be a string");
      check_schema_version(value.get<std::string>());
      continue;
    }
    if (key == "config" || key == "help") throw ConfigError(fmt::format("config key '{}' is not allowed", key));
    const std::string opt = "--" + key;
    const CLI::Option* o = sub ? sub->get_option_no_throw(opt) : nullptr;
    if (!o) o = app.get_option_no_throw(opt);
    if (!o) throw ConfigError(fmt::format("unknown config key '{}'", key));
    if (o->get_type_size() == 0) {
      if (!value.is_boolean()) throw ConfigError(fmt::format("config key '{}' takes true or false", key));
      if (value.get<bool>()) out.push_back(opt);
      continue;
    }
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
      if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
      if (v.is_number_float()) return fmt::format("{}", v.get<double>());
      throw ConfigError(fmt::format("config key '{}' has an unsupported value", key));
    };
    if (value.is_array()) {
      for (const auto& v : value) {
        out.push_back(opt);
        out.push_back(scalar(v));
      }
    } else {
      out.push_back(opt);
      out.push_back(scalar(value));
    }
  }
  return out;
}

json effective_config(const CLI::App& app, const CLI::App* sub) {
  json cfg = json::object();
  cfg["command"] = sub->get_name();
  auto dump_opts = [&](const CLI::App& a) {
    for (const CLI::Option* o : a.get_options()) {
      if (o->get_lnames().empty()) continue;
      const std::string key = o->get_lnames().front();
      if (key == "help" || key == "seed" || key == "out-dir" || key == "config") continue;
      if (o->count() > 0) {
        const auto& r = o->results();
        if (o->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll) cfg[key] = r;
        else cfg[key] = r.back();
      } else {
        cfg[key] = o->get_default_str();
      }
    }
  };
  dump_opts(app);
  dump_opts(*sub);
  return cfg;
}

json diagnostic(const std::string& kind, int code, const std::string& message) {
  return {{"error", kind}, {"exit_code", code}, {"message", message}};
}

}  // namespace

// ---------------------------------------------------------------------------

double parse_angle(const std::string& s) {
  if (s == "0") return 0.0;
  auto ends_with = [&](const std::string& suf) { return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0; };
  if (ends_with("deg")) return parse_number(s.substr(0, s.size() - 3), "angle") * std::numbers::pi / 180.0;
  if (ends_with("rad")) return parse_number(s.substr(0, s.size() - 3), "angle");
  throw ConfigError(fmt::format("angle '{}' needs a deg or rad suffix", s));
}

cplx parse_complex(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ConfigError("empty complex number");
  if (s.back() != 'i') return {parse_number(s, "complex"), 0.0};
  const std::string body = s.substr(0, s.size() - 1);
  // Split at the last sign that is not the leading sign or part of an exponent.
  std::size_t split_at = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split_at = k;
      break;
    }
  }
  auto imag = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_number(t, "complex");
  };
  if (split_at == std::string::npos) return {0.0, imag(body)};
  return {parse_number(body.substr(0, split_at), "complex"), imag(body.substr(split_at))};
}

std::string format_uncertain(double value, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) return fmt::format("{:.3f}", value);
  int digits = -static_cast<int>(std::floor(std::log10(sigma)));
  long u = std::lround(sigma * std::pow(10.0, digits));
  if (u >= 10) {
    --digits;
    u = 1;
  }
  if (digits < 0) return fmt::format("{:.0f}({:.0f})", value, sigma);
  return fmt::format("{:.{}f}({})", value, digits, u);
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"Spin-orbit remote state preparation simulator", "sorsp"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  RunContext ctx;
  app.add_option("--seed", ctx.g.seed, "64-bit master seed; drawn from entropy when absent");
  app.add_option("--out-dir", ctx.g.out_dir, "directory for artifacts");
  app.add_option("--config", ctx.g.config, "JSON file whose keys are long option names");
  app.add_option("--format", ctx.g.format, "tabular artifact format")->check(CLI::IsMember({"json", "csv"}));

  RespOpts ro;
  CLI::App* resp = app.add_subcommand("resp", "remote state preparation run");
  resp->add_option("--target", ro.target, "phi+, phi-, psi+ or psi-");
  resp->add_option("--family", ro.family, "alpha=..,beta=..,eta=..,theta=..,phi=.. with deg/rad angles");
  resp->add_option("--preset", ro.preset, "family preset")->check(CLI::IsMember({"canonical", "lc1"}));
  resp->add_option("--arbitrary", ro.arbitrary, "a=..,b=..,c=..,d=.. Bell amplitudes");
  resp->add_flag("--heralded", ro.heralded, "one-bit heralded variant of --arbitrary");
  resp->add_option("--mixed", ro.mixed, "mixed-state preparation")->check(CLI::IsMember({"cc-phi", "cc-psi", "mixed"}));
  resp->add_option("--dephase", ro.dephase, "dephasing strength applied to Bob's photon");

  TomoOpts to;
  CLI::App* tomo = app.add_subcommand("tomo", "simulate counts and reconstruct");
  tomo->add_option("--state", to.state, "state to simulate");
  tomo->add_option("--counts", to.counts, "reconstruct from a counts file (.csv or .json)");
  tomo->add_option("--target", to.target, "reference state for the metrics (default: --state)");
  tomo->add_option("--mean-total", to.mean_total, "expected counts per unit projector");
  tomo->add_option("--acquisition-s", to.acquisition_s, "acquisition time per setting");
  tomo->add_flag("--noiseless", to.noiseless, "use exact expected counts");
  tomo->add_option("--noise", to.noise, "depolarizing probability before detection");
  tomo->add_option("--mc", to.mc, "Monte Carlo resamples for error bars");
  tomo->add_option("--method", to.method)->check(CLI::IsMember({"mle", "linear"}));
  tomo->add_option("--max-iterations", to.max_iterations)->check(CLI::PositiveNumber);

  BeamOpts bo;
  CLI::App* beam = app.add_subcommand("beam", "transverse polarization profile");
  beam->add_option("--state", bo.state);
  beam->add_option("--nx", bo.nx);
  beam->add_option("--ny", bo.ny);
  beam->add_option("--step", bo.step, "grid step, mm");
  beam->add_option("--waist", bo.waist, "beam waist, mm");
  beam->add_option("--pinhole", bo.pinhole, "pinhole diameter, mm");
  beam->add_option("--counts-per-projection", bo.counts_per_projection, "expected counts at peak; 0 = noiseless");
  beam->add_option("--noise", bo.noise, "depolarizing probability");
  beam->add_option("--offset", bo.offset, "beam center x,y in mm");
  beam->add_flag("--register", bo.reg, "search for the beam center before comparing");
  beam->add_flag("--analytic", bo.analytic, "render the point field instead of a pinhole scan");
  beam->add_option("--style", bo.style)->check(CLI::IsMember({"ellipse-grid", "intensity-projections"}));

  CLI::App* conventions = app.add_subcommand("conventions", "print basis and phase conventions");

  ReportOpts rep;
  CLI::App* report = app.add_subcommand("report", "quality table over the target states");
  report->add_option("--targets", rep.targets, "state keys (default: all table targets)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(',');
  report->add_option("--mean-total", rep.mean_total);
  report->add_flag("--noiseless", rep.noiseless);
  report->add_option("--noise", rep.noise);
  report->add_option("--mc", rep.mc);

  auto fail = [&](const std::string& kind, int code, const std::string& msg) {
    err << diagnostic(kind, code, msg).dump() << "\n";
    return code;
  };

  try {
    std::vector<std::string> full = args;
    const std::set<std::string> subs = {"resp", "tomo", "beam", "conventions", "report"};
    const ArgScan scan = scan_args(args, subs);
    bool seed_from_config = false;
    if (scan.config) {
      const json cfg = parse_json(read_file(*scan.config), *scan.config);
      const CLI::App* sub = scan.subcommand ? app.get_subcommand(args[*scan.subcommand]) : nullptr;
      const auto tokens = config_tokens(cfg, app, sub);
      seed_from_config = cfg.is_object() && cfg.contains("seed");
      const std::size_t at = scan.subcommand ? *scan.subcommand + 1 : 0;
      full.insert(full.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    }
    std::vector<std::string> reversed(full.rbegin(), full.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      return fail("config", kExitConfig, e.what());
    }

    CLI::App* chosen = app.get_subcommands().front();
    if (ctx.g.seed) {
      ctx.seed = *ctx.g.seed;
      ctx.seed_source = scan.seed_given ? "cli" : (seed_from_config ? "config" : "cli");
    } else {
      ctx.seed = entropy_seed();
      ctx.seed_source = "entropy";
    }
    ctx.out = &out;
    if (chosen == conventions) {
      cmd_conventions(ctx);
      return kExitOk;
    }

    Artifacts artifacts(ctx.g.out_dir);
    ctx.artifacts = &artifacts;
    if (chosen == resp) cmd_resp(ro, ctx);
    else if (chosen == tomo) cmd_tomo(to, ctx);
    else if (chosen == beam) cmd_beam(bo, ctx);
    else cmd_report(rep, ctx);

    const json cfg = effective_config(app, chosen);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json manifest = versioned({{"tool", "sorsp"},
                                     {"tool_version", kToolVersion},
                                     {"config", cfg},
                                     {"config_hash", hex64(fnv1a(cfg.dump()))},
                                     {"seed", ctx.seed},
                                     {"seed_source", ctx.seed_source},
                                     {"files", artifacts.files()},
                                     {"duration_s", seconds}});
    artifacts.write_raw("manifest.json", dump(manifest));
    return kExitOk;
  } catch (const ConfigError& e) {
    return fail("config", kExitConfig, e.what());
  } catch (const SchemaError& e) {
    return fail("schema", kExitIo, e.what());
  } catch (const IoError& e) {
    return fail("io", kExitIo, e.what());
  } catch (const NumericError& e) {
    return fail("numeric", kExitNumeric, e.what());
  } catch (const std::domain_error& e) {
    return fail("numeric", kExitNumeric, e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", kExitConfig, e.what());
  } catch (const std::out_of_range& e) {
    return fail("config", kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
}

}  // namespace sorsp::cli
