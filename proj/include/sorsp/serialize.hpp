// JSON and CSV forms of states, transcripts, counts and reports. Every
// document carries "schema_version"; documents with a newer major version are
// refused.
#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sorsp/beams.hpp"
#include "sorsp/metrics.hpp"
#include "sorsp/protocol.hpp"
#include "sorsp/tomography.hpp"

namespace sorsp {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

/// Malformed or incompatible file contents.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json versioned(json body);
/// Throws SchemaError when the version is missing, malformed or of a newer major.
void check_schema(const json& doc);
void check_schema_version(const std::string& version);

json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const json& j);
json ket_to_json(const Ket& v);

json to_json(const PureState& psi);
json to_json(const DensityMatrix& rho);
json to_json(const QualityReport& r);
json to_json(const ProtocolTranscript& t);
json to_json(const ReconstructionResult& r);
json to_json(const LinearEstimate& r);
json to_json(const MonteCarloSummary& s);
json to_json(const GridSpec& g);
json to_json(const ProfileFidelity& f);
json to_json(const Registration& r);

DensityMatrix density_from_json(const json& j);

json counts_to_json(const CountRecord& c);
CountRecord counts_from_json(const json& j);

/// "# schema_version=..." and "# rate=..." comment lines, then setting,count,acquisition_s rows.
std::string counts_to_csv(const CountRecord& c);
CountRecord counts_from_csv(const std::string& text);

}  // namespace sorsp
