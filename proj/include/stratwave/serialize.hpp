#pragma once

// JSON / CSV encodings of profiles, states and reports, plus atomic file output.
// nlohmann::json objects keep keys sorted, and doubles are printed in shortest
// round-trip form, so a dump -> parse cycle is bit-exact.

#include <json.hpp>
#include <string>
#include <vector>

#include "stratwave/hessian.hpp"
#include "stratwave/laminar.hpp"

namespace stratwave {

using Json = nlohmann::json;

/// Throws ErrorCode::config with the key path when `key` is missing or has the wrong type.
const Json& require_key(const Json& obj, const std::string& key, const std::string& where);
double get_double(const Json& obj, const std::string& key, const std::string& where);
double get_double(const Json& obj, const std::string& key, const std::string& where, double fallback);
int get_int(const Json& obj, const std::string& key, const std::string& where, int fallback);
bool get_bool(const Json& obj, const std::string& key, const std::string& where, bool fallback);
std::string get_string(const Json& obj, const std::string& key, const std::string& where, const std::string& fallback);

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& where);

Json profile_to_json(const ScalarProfile& p);
/// {"kind": "constant"|"linear"|"polynomial"|"tabulated", ...}.
ScalarProfile profile_from_json(const Json& j, const std::string& where);

Json layer_profiles_to_json(const LayerProfiles& p);
/// {"rho": profile, "beta": profile, "s_range": [lo, hi], "q_range": [lo, hi]}; ranges optional.
LayerProfiles layer_profiles_from_json(const Json& j, int layer_id, const std::string& where);

Json curve_to_json(const SurfaceCurve& c);
SurfaceCurve curve_from_json(const Json& j, const std::string& where);

Json params_to_json(const PhysicalParams& p);

Json state_to_json(const FlowState& state);
/// Rebuilds domain and grids, then validates traces (ErrorCode::trace).
FlowState state_from_json(const Json& j, double trace_tol = 1e-9);

Json perturbation_to_json(const Perturbation& p);

Json norm_to_json(const NormPair& n);
Json residual_to_json(const ResidualReport& r, bool include_fields);
Json variation_to_json(const VariationBreakdown& v);
Json audit_to_json(const AuditReport& r);
Json gradient_rows_to_json(const std::vector<GradientCheckRow>& rows);
Json laminar_to_json(const LaminarFlow& flow, int samples = 65);
Json hessian_to_json(const HessianMatrix& m, const std::string& sidecar_name);
/// Row-major little-endian doubles of the symmetrised matrix.
std::string hessian_sidecar(const HessianMatrix& m);
Json verdict_to_json(const StabilityVerdict& v);

/// "%.17g"; "nan"/"inf" spelled out.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

 private:
  std::size_t columns_;
  std::string out_;
};

/// Writes to a temporary file in the same directory, then renames over `path`.
void atomic_write(const std::string& path, const std::string& content);

/// Pretty JSON (2-space indent) with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace stratwave
