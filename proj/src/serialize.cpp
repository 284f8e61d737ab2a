#include "stratwave/serialize.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace stratwave {

namespace {

std::string path_of(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

Json interval_to_json(const Interval& iv) { return Json::array({iv.lo, iv.hi}); }

Interval interval_from_json(const Json& j, const std::string& where) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), ErrorCode::config,
          where + ": expected [lo, hi]");
  Interval iv{j[0].get<double>(), j[1].get<double>()};
  require(iv.lo < iv.hi, ErrorCode::config, where + ": lo must be below hi");
  return iv;
}

std::vector<double> doubles_from_json(const Json& j, const std::string& where) {
  require(j.is_array(), ErrorCode::config, where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    require(v.is_number(), ErrorCode::config, where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const char* xd_name(XDerivative xd) { return xd == XDerivative::spectral ? "spectral" : "fourth_order"; }

}  // namespace

const Json& require_key(const Json& obj, const std::string& key, const std::string& where) {
  require(obj.is_object(), ErrorCode::config, (where.empty() ? "config" : where) + ": expected an object");
  auto it = obj.find(key);
  require(it != obj.end(), ErrorCode::config, "missing key '" + path_of(where, key) + "'");
  return *it;
}

double get_double(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  require(v.is_number(), ErrorCode::config, path_of(where, key) + ": expected a number");
  double x = v.get<double>();
  require(std::isfinite(x), ErrorCode::config, path_of(where, key) + ": must be finite");
  return x;
}

double get_double(const Json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_double(obj, key, where);
}

int get_int(const Json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  require(v.is_number_integer(), ErrorCode::config, path_of(where, key) + ": expected an integer");
  auto x = v.get<long long>();
  require(x >= -(1LL << 31) && x < (1LL << 31), ErrorCode::config, path_of(where, key) + ": out of range");
  return static_cast<int>(x);
}

bool get_bool(const Json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  require(v.is_boolean(), ErrorCode::config, path_of(where, key) + ": expected true or false");
  return v.get<bool>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& where,
                       const std::string& fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  require(v.is_string(), ErrorCode::config, path_of(where, key) + ": expected a string");
  return v.get<std::string>();
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j, const std::string& where) {
  auto d = doubles_from_json(j, where);
  return Eigen::Map<Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
}

Json profile_to_json(const ScalarProfile& p) {
  switch (p.kind()) {
    case ScalarProfile::Kind::constant:
      return {{"kind", "constant"}, {"value", p.value(0.0)}};
    case ScalarProfile::Kind::linear:
      return {{"kind", "linear"}, {"value_at_zero", p.value(0.0)}, {"slope", p.d1(0.0)}};
    case ScalarProfile::Kind::polynomial:
      return {{"kind", "polynomial"}, {"coefficients", p.coefficients()}};
    case ScalarProfile::Kind::tabulated:
      return {{"kind", "tabulated"}, {"knots", p.knots()}, {"values", p.values()}};
    case ScalarProfile::Kind::custom:
      break;
  }
  return {{"kind", "custom"}};
}

ScalarProfile profile_from_json(const Json& j, const std::string& where) {
  std::string kind = get_string(j, "kind", where, "");
  if (kind == "constant") return ScalarProfile::constant(get_double(j, "value", where));
  if (kind == "linear") return ScalarProfile::linear(get_double(j, "value_at_zero", where), get_double(j, "slope", where));
  if (kind == "polynomial") {
    auto c = doubles_from_json(require_key(j, "coefficients", where), path_of(where, "coefficients"));
    require(!c.empty(), ErrorCode::config, where + ": polynomial needs at least one coefficient");
    return ScalarProfile::polynomial(std::move(c));
  }
  if (kind == "tabulated") {
    auto k = doubles_from_json(require_key(j, "knots", where), path_of(where, "knots"));
    auto v = doubles_from_json(require_key(j, "values", where), path_of(where, "values"));
    try {
      return ScalarProfile::tabulated(std::move(k), std::move(v));
    } catch (const Error& e) {
      fail(ErrorCode::config, where + ": " + e.what());
    }
  }
  fail(ErrorCode::config, where + ": unknown profile kind '" + kind + "'");
}

Json layer_profiles_to_json(const LayerProfiles& p) {
  return {{"rho", profile_to_json(p.rho)},
          {"beta", profile_to_json(p.beta)},
          {"s_range", interval_to_json(p.s_range)},
          {"q_range", interval_to_json(p.q_range)}};
}

LayerProfiles layer_profiles_from_json(const Json& j, int layer_id, const std::string& where) {
  LayerProfiles p;
  p.layer_id = layer_id;
  p.rho = profile_from_json(require_key(j, "rho", where), path_of(where, "rho"));
  p.beta = profile_from_json(require_key(j, "beta", where), path_of(where, "beta"));
  if (j.contains("s_range")) p.s_range = interval_from_json(j["s_range"], path_of(where, "s_range"));
  if (j.contains("q_range")) p.q_range = interval_from_json(j["q_range"], path_of(where, "q_range"));
  return p;
}

Json curve_to_json(const SurfaceCurve& c) {
  return {{"mean", c.mean()}, {"cos", c.cos_coeffs()}, {"sin", c.sin_coeffs()}};
}

SurfaceCurve curve_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return SurfaceCurve::flat(j.get<double>());
  double mean = get_double(j, "mean", where, 0.0);
  std::vector<double> c, s;
  if (j.contains("cos")) c = doubles_from_json(j["cos"], path_of(where, "cos"));
  if (j.contains("sin")) s = doubles_from_json(j["sin"], path_of(where, "sin"));
  return SurfaceCurve(mean, std::move(c), std::move(s));
}

Json params_to_json(const PhysicalParams& p) {
  return {{"g", p.g}, {"c", p.c}, {"d", p.d}, {"P_atm", p.P_atm}, {"Q1", p.Q1}, {"Q2", p.Q2}};
}

Json state_to_json(const FlowState& s) {
  return {{"params", params_to_json(s.params)},
          {"p1", s.p1},
          {"p2", s.p2},
          {"surfaces", {{"d", s.domain.d}, {"eta", curve_to_json(s.domain.eta)},
                        {"eta_tilde", curve_to_json(s.domain.eta_tilde)}}},
          {"grid", {{"nx", s.nx()}, {"ns1", s.grids.layer1.ns()}, {"ns2", s.grids.layer2.ns()},
                    {"x_derivative", xd_name(s.grids.layer1.x_derivative())}}},
          {"psi1", vector_to_json(s.psi1)},
          {"psi2", vector_to_json(s.psi2)},
          {"fingerprint", state_fingerprint(s)}};
}

FlowState state_from_json(const Json& j, double trace_tol) {
  const Json& pj = require_key(j, "params", "state");
  PhysicalParams params;
  params.g = get_double(pj, "g", "state.params");
  params.c = get_double(pj, "c", "state.params", 0.0);
  params.d = get_double(pj, "d", "state.params");
  params.P_atm = get_double(pj, "P_atm", "state.params", 0.0);
  params.Q1 = get_double(pj, "Q1", "state.params", 0.0);
  params.Q2 = get_double(pj, "Q2", "state.params", 0.0);
  const Json& sj = require_key(j, "surfaces", "state");
  double d = get_double(sj, "d", "state.surfaces");
  auto eta = curve_from_json(require_key(sj, "eta", "state.surfaces"), "state.surfaces.eta");
  auto eta_tilde = curve_from_json(require_key(sj, "eta_tilde", "state.surfaces"), "state.surfaces.eta_tilde");
  const Json& gj = require_key(j, "grid", "state");
  int nx = get_int(gj, "nx", "state.grid", 0), ns1 = get_int(gj, "ns1", "state.grid", 0),
      ns2 = get_int(gj, "ns2", "state.grid", 0);
  std::string xd = get_string(gj, "x_derivative", "state.grid", "spectral");
  require(xd == "spectral" || xd == "fourth_order", ErrorCode::config, "state.grid.x_derivative: unknown '" + xd + "'");
  auto domain = build_domain(d, eta_tilde, eta);
  auto grids = build_grids(domain, nx, ns1, ns2, xd == "spectral" ? XDerivative::spectral : XDerivative::fourth_order);
  Field psi1 = vector_from_json(require_key(j, "psi1", "state"), "state.psi1");
  Field psi2 = vector_from_json(require_key(j, "psi2", "state"), "state.psi2");
  return assemble_state(std::move(psi1), std::move(psi2), std::move(domain), std::move(grids),
                        get_double(j, "p1", "state"), get_double(j, "p2", "state"), params, trace_tol);
}

Json perturbation_to_json(const Perturbation& p) {
  return {{"psi1p", vector_to_json(p.psi1p)},
          {"psi2p", vector_to_json(p.psi2p)},
          {"eta_p", curve_to_json(p.eta_p)},
          {"eta_tilde_p", curve_to_json(p.eta_tilde_p)}};
}

Json norm_to_json(const NormPair& n) { return {{"l2", n.l2}, {"max", n.max}}; }

Json residual_to_json(const ResidualReport& r, bool include_fields) {
  Json out = {{"interior_1", norm_to_json(r.interior_1)},
              {"interior_2", norm_to_json(r.interior_2)},
              {"surface_bernoulli", norm_to_json(r.surface_bernoulli)},
              {"interface_bernoulli", norm_to_json(r.interface_bernoulli)},
              {"dirichlet_bottom", r.dirichlet_bottom},
              {"dirichlet_interface", r.dirichlet_interface},
              {"dirichlet_surface", r.dirichlet_surface},
              {"max_norm", r.max_norm()}};
  if (include_fields) {
    out["fields"] = {{"interior_res_1", vector_to_json(r.interior_res_1)},
                     {"interior_res_2", vector_to_json(r.interior_res_2)},
                     {"surface_bernoulli_res", vector_to_json(r.surface_bernoulli_res)},
                     {"interface_bernoulli_res", vector_to_json(r.interface_bernoulli_res)}};
  }
  return out;
}

Json variation_to_json(const VariationBreakdown& v) {
  return {{"dH1", v.dH1}, {"dH2", v.dH2}, {"dH3", v.dH3}, {"dH4", v.dH4}, {"total", v.total}};
}

Json audit_to_json(const AuditReport& r) {
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"seed", t.seed}, {"pert_norm", t.pert_norm}, {"variation", variation_to_json(t.variation)},
                      {"normalized", t.normalized}});
  }
  return {{"trials", trials},
          {"max_normalized", r.max_normalized},
          {"residual", residual_to_json(r.residual, false)},
          {"residual_max", r.residual_max},
          {"critical", r.critical},
          {"solution", r.solution},
          {"critical_implies_solution", r.critical_implies_solution},
          {"solution_implies_critical", r.solution_implies_critical},
          {"tol_grad", r.tol_grad},
          {"tol_res", r.tol_res},
          {"verdict", r.verdict()}};
}

Json gradient_rows_to_json(const std::vector<GradientCheckRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"seed", r.seed}, {"eps", r.eps}, {"analytic", r.analytic}, {"fd", r.fd},
                   {"abs_err", r.abs_err}, {"order_est", r.order_est}});
  }
  return out;
}

Json laminar_to_json(const LaminarFlow& flow, int samples) {
  auto layer = [&](const ChebProfile& p) {
    Json uniform_y = Json::array(), uniform_psi = Json::array(), uniform_dpsi = Json::array();
    for (int i = 0; i < samples; ++i) {
      double y = p.a() + (p.b() - p.a()) * i / (samples - 1);
      uniform_y.push_back(y);
      uniform_psi.push_back(p.value(y));
      uniform_dpsi.push_back(p.d1(y));
    }
    return Json{{"interval", {p.a(), p.b()}},
                {"degree", p.degree()},
                {"nodes", {{"y", vector_to_json(p.node_y())}, {"psi", vector_to_json(p.node_values())}}},
                {"samples", {{"y", uniform_y}, {"psi", uniform_psi}, {"dpsi", uniform_dpsi}}}};
  };
  Json out = {{"g", flow.g},
              {"d", flow.d},
              {"h_tilde", flow.h_tilde},
              {"h", flow.h},
              {"p1", flow.p1},
              {"p2", flow.p2},
              {"Q1", flow.Q1},
              {"Q2", flow.Q2},
              {"ode_residual", flow.ode_residual},
              {"newton_iterations", flow.newton_iterations},
              {"stagnation", flow.stagnation},
              {"warnings", flow.warnings},
              {"layer1", layer(flow.psi1)},
              {"layer2", layer(flow.psi2)}};
  if (flow.profiles1 && flow.profiles2) {
    out["profiles"] = {{"layer1", layer_profiles_to_json(*flow.profiles1)},
                       {"layer2", layer_profiles_to_json(*flow.profiles2)}};
  }
  return out;
}

Json hessian_to_json(const HessianMatrix& m, const std::string& sidecar_name) {
  return {{"dimension", m.entries.rows()},
          {"labels", m.labels},
          {"asymmetry", m.asymmetry},
          {"gram_condition", m.gram_condition},
          {"state_hash", m.state_hash},
          {"grid", {{"nx", m.nx}, {"ns1", m.ns1}, {"ns2", m.ns2}}},
          {"entries_file", sidecar_name},
          {"entries_layout", "row-major float64 little-endian"}};
}

std::string hessian_sidecar(const HessianMatrix& m) {
  const auto n = m.entries.rows();
  std::string out;
  out.reserve(static_cast<std::size_t>(n * n) * 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      double v = m.entries(i, k);
      unsigned char b[8];
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      for (int q = 0; q < 8; ++q) b[q] = static_cast<unsigned char>(bits >> (8 * q));
      out.append(reinterpret_cast<const char*>(b), 8);
    }
  }
  return out;
}

Json verdict_to_json(const StabilityVerdict& v) {
  Json out = {{"verdict", to_string(v.verdict)},
              {"lambda_min", v.lambda_min},
              {"matrix_norm", v.matrix_norm},
              {"residual_max", v.residual_max},
              {"asymmetry", v.asymmetry},
              {"eigenvalues", vector_to_json(v.eigenvalues)},
              {"labels", v.labels},
              {"surfaces_unperturbed", v.surfaces_unperturbed},
              {"d22F_negative", v.d22F_negative},
              {"reason", v.reason}};
  if (v.witness) {
    out["witness"] = {{"coefficients", vector_to_json(v.witness_coefficients)},
                      {"value", v.witness_value},
                      {"perturbation", perturbation_to_json(*v.witness)}};
  } else {
    out["witness"] = nullptr;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  require(cells.size() == columns_, ErrorCode::internal, "csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
  return *this;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    require(static_cast<bool>(f), ErrorCode::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io, "cannot rename onto " + path);
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace stratwave
