#include "sorsp/serialize.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

namespace sorsp {

namespace {

int major_of(const std::string& version) {
  int major = 0;
  const auto dot = version.find('.');
  const std::string head = version.substr(0, dot);
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), major);
  if (ec != std::errc() || ptr != head.data() + head.size() || head.empty()) {
    throw SchemaError(fmt::format("malformed schema_version '{}'", version));
  }
  return major;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(fmt::format("{}: cannot parse '{}' as a number", what, s));
  }
}

template <class T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("field '{}': {}", key, e.what()));
  }
}

}  // namespace

json versioned(json body) {
  json out;
  out["schema_version"] = kSchemaVersion;
  for (auto& [k, v] : body.items()) out[k] = v;
  return out;
}

void check_schema_version(const std::string& version) {
  if (major_of(version) > major_of(kSchemaVersion)) {
    throw SchemaError(fmt::format("schema_version {} is newer than supported {}", version, kSchemaVersion));
  }
}

void check_schema(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc["schema_version"].is_string()) {
    throw SchemaError("document has no schema_version");
  }
  check_schema_version(doc["schema_version"].get<std::string>());
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw SchemaError("matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw SchemaError("matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw SchemaError("matrix entries must be [re, im] pairs");
      }
      m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json ket_to_json(const Ket& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

json to_json(const PureState& psi) {
  return {{"kind", "pure"}, {"labels", psi.labels()}, {"amplitudes", ket_to_json(psi.amplitudes())}};
}

json to_json(const DensityMatrix& rho) {
  return {{"kind", "density"}, {"dim", rho.dim()}, {"matrix", matrix_to_json(rho.matrix())}};
}

DensityMatrix density_from_json(const json& j) {
  try {
    return DensityMatrix(matrix_from_json(j.at("matrix")));
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("density matrix: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(fmt::format("density matrix: {}", e.what()));
  }
}

json to_json(const QualityReport& r) {
  return {{"fidelity", r.fidelity}, {"tangle", r.tangle}, {"linear_entropy", r.linear_entropy}, {"purity", r.purity}};
}

json to_json(const ProtocolTranscript& t) {
  json out;
  out["protocol"] = t.protocol;
  if (t.alice) {
    json a{{"label", t.alice->label}, {"probability", t.alice->probability}, {"outcome_index", t.alice->outcome_index}};
    if (t.alice->povm_index) a["povm_index"] = *t.alice->povm_index;
    if (t.alice->vn_index) a["vn_index"] = *t.alice->vn_index;
    out["alice"] = a;
  } else {
    out["alice"] = nullptr;
  }
  out["cbits_sent"] = t.cbits_sent;
  out["ebits_consumed"] = t.ebits_consumed;
  out["message_bits"] = t.message_bits;
  out["correction"] = {{"kind", t.correction.kind},
                       {"description", t.correction.description},
                       {"unitary", matrix_to_json(t.correction.unitary)}};
  out["bob_state"] = std::visit([](const auto& s) { return to_json(s); }, t.bob_state);
  out["success"] = t.success;
  out["success_probability"] = t.success_probability;
  if (t.seed) out["seed"] = *t.seed;
  return out;
}

json to_json(const ReconstructionResult& r) {
  return {{"method", "mle"},
          {"rho", to_json(r.rho)},
          {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"gradient_norm", r.gradient_norm}};
}

json to_json(const LinearEstimate& r) {
  return {{"method", "linear"},
          {"matrix", matrix_to_json(r.rho)},
          {"min_eigenvalue", r.min_eigenvalue},
          {"negative_eigenvalue", r.negative_eigenvalue}};
}

json to_json(const MonteCarloSummary& s) {
  auto stats = [](const MetricStats& m) { return json{{"mean", m.mean}, {"stddev", m.stddev}}; };
  return {{"samples", s.samples},
          {"non_converged", s.non_converged},
          {"fidelity", stats(s.fidelity)},
          {"tangle", stats(s.tangle)},
          {"linear_entropy", stats(s.linear_entropy)}};
}

json to_json(const GridSpec& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"step_mm", g.step}, {"origin_offset_mm", {g.dx, g.dy}}, {"waist_mm", g.waist}};
}

json to_json(const ProfileFidelity& f) {
  return {{"points", f.points},
          {"mean", f.mean},
          {"stddev", f.stddev},
          {"weighted_mean", f.weighted_mean},
          {"weighted_stddev", f.weighted_stddev}};
}

json to_json(const Registration& r) {
  return {{"dx_mm", r.dx},
          {"dy_mm", r.dy},
          {"objective", r.objective},
          {"degenerate", r.degenerate},
          {"lattice_step_mm", r.lattice_step}};
}

json counts_to_json(const CountRecord& c) {
  json rows = json::array();
  for (std::size_t i = 0; i < c.settings.size(); ++i)
    rows.push_back({{"setting", c.settings[i].label()}, {"count", c.counts[i]}});
  return versioned({{"rate", c.rate}, {"acquisition_s", c.acquisition_time}, {"counts", rows}});
}

CountRecord counts_from_json(const json& j) {
  check_schema(j);
  CountRecord rec;
  rec.rate = get_field<double>(j, "rate");
  rec.acquisition_time = get_field<double>(j, "acquisition_s");
  if (!j.contains("counts") || !j["counts"].is_array()) throw SchemaError("missing counts array");
  for (const auto& row : j["counts"]) {
    try {
      rec.settings.push_back(setting_by_label(get_field<std::string>(row, "setting")));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
    rec.counts.push_back(get_field<double>(row, "count"));
  }
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return rec;
}

std::string counts_to_csv(const CountRecord& c) {
  std::string out = fmt::format("# schema_version={}\n# rate={:.17g}\nsetting,count,acquisition_s\n", kSchemaVersion, c.rate);
  for (std::size_t i = 0; i < c.settings.size(); ++i)
    out += fmt::format("{},{:.17g},{:.17g}\n", c.settings[i].label(), c.counts[i], c.acquisition_time);
  return out;
}

CountRecord counts_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CountRecord rec;
  bool have_version = false, have_rate = false, have_header = false;
  std::optional<double> time;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "schema_version") {
        check_schema_version(value);
        have_version = true;
      } else if (key == "rate") {
        rec.rate = parse_double(value, "rate");
        have_rate = true;
      }
      continue;
    }
    if (!have_header) {
      if (line != "setting,count,acquisition_s") throw SchemaError(fmt::format("unexpected CSV header '{}'", line));
      have_header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw SchemaError(fmt::format("malformed CSV row '{}'", line));
    try {
      rec.settings.push_back(setting_by_label(line.substr(0, c1)));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
    rec.counts.push_back(parse_double(line.substr(c1 + 1, c2 - c1 - 1), "count"));
    const double t = parse_double(line.substr(c2 + 1), "acquisition_s");
    if (time && *time != t) throw SchemaError("per-setting acquisition times must be equal");
    time = t;
  }
  if (!have_version) throw SchemaError("counts CSV has no schema_version line");
  if (!have_rate) throw SchemaError("counts CSV has no rate line");
  if (!time) throw SchemaError("counts CSV has no rows");
  rec.acquisition_time = *time;
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return rec;
}

}  // namespace sorsp
