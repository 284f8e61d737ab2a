#include "stratwave/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stratwave {

namespace {

namespace fs = std::filesystem;

struct GridSpec {
  int nx = 64, ns1 = 33, ns2 = 33;
  XDerivative xd = XDerivative::spectral;
};

GridSpec parse_grid(const Json& config) {
  GridSpec g;
  if (!config.contains("grid")) return g;
  const Json& j = config["grid"];
  g.nx = get_int(j, "nx", "grid", g.nx);
  g.ns1 = get_int(j, "ns1", "grid", g.ns1);
  g.ns2 = get_int(j, "ns2", "grid", g.ns2);
  require(g.nx >= 8 && g.nx % 2 == 0 && g.nx <= LayerGrid::max_nx, ErrorCode::config,
          "grid.nx must be even and in [8, " + std::to_string(LayerGrid::max_nx) + "]");
  require(g.ns1 >= 5 && g.ns1 <= LayerGrid::max_ns && g.ns2 >= 5 && g.ns2 <= LayerGrid::max_ns, ErrorCode::config,
          "grid.ns1 and grid.ns2 must be in [5, " + std::to_string(LayerGrid::max_ns) + "]");
  std::string xd = get_string(j, "x_derivative", "grid", "spectral");
  require(xd == "spectral" || xd == "fourth_order", ErrorCode::config, "grid.x_derivative: unknown '" + xd + "'");
  g.xd = xd == "spectral" ? XDerivative::spectral : XDerivative::fourth_order;
  return g;
}

PhysicalParams parse_physics(const Json& config) {
  const Json& j = require_key(config, "physics", "");
  PhysicalParams p;
  p.g = get_double(j, "g", "physics");
  p.d = get_double(j, "d", "physics");
  p.c = get_double(j, "c", "physics", 0.0);
  p.P_atm = get_double(j, "P_atm", "physics", 0.0);
  require(p.g > 0, ErrorCode::config, "physics.g must be positive");
  require(p.d > 0, ErrorCode::config, "physics.d must be positive");
  return p;
}

std::pair<std::shared_ptr<const LayerProfiles>, std::shared_ptr<const LayerProfiles>> parse_profiles(
    const Json& config) {
  const Json& j = require_key(config, "profiles", "");
  auto l1 = std::make_shared<LayerProfiles>(layer_profiles_from_json(require_key(j, "layer1", "profiles"), 1,
                                                                     "profiles.layer1"));
  auto l2 = std::make_shared<LayerProfiles>(layer_profiles_from_json(require_key(j, "layer2", "profiles"), 2,
                                                                     "profiles.layer2"));
  return {l1, l2};
}

AnalyticStream parse_stream(const Json& j, const std::string& where) {
  std::string kind = get_string(j, "kind", where, "");
  if (kind == "polynomial") {
    Eigen::VectorXd cv = vector_from_json(require_key(j, "coefficients", where), where + ".coefficients");
    std::vector<double> c(cv.data(), cv.data() + cv.size());
    require(!c.empty(), ErrorCode::config, where + ": polynomial needs coefficients");
    auto eval = [c](double y, int deriv) {
      double s = 0.0;
      for (int i = static_cast<int>(c.size()) - 1; i >= deriv; --i) {
        double f = 1.0;
        for (int q = 0; q < deriv; ++q) f *= (i - q);
        s = s * y + f * c[i];
      }
      return s;
    };
    return {[eval](double y) { return eval(y, 0); }, [eval](double y) { return eval(y, 1); },
            [eval](double y) { return eval(y, 2); }};
  }
  if (kind == "sinh") {
    double a = get_double(j, "amplitude", where), k = get_double(j, "rate", where);
    return {[a, k](double y) { return a * std::sinh(k * y); }, [a, k](double y) { return a * k * std::cosh(k * y); },
            [a, k](double y) { return a * k * k * std::sinh(k * y); }};
  }
  fail(ErrorCode::config, where + ": unknown stream kind '" + kind + "' (polynomial or sinh)");
}

double positive(const Json& j, const std::string& key, const std::string& where, double fallback) {
  double v = get_double(j, key, where, fallback);
  require(v > 0, ErrorCode::config, where + "." + key + " must be positive");
  return v;
}

int positive_int(const Json& j, const std::string& key, const std::string& where, int fallback) {
  int v = get_int(j, key, where, fallback);
  require(v > 0, ErrorCode::config, where + "." + key + " must be positive");
  return v;
}

std::vector<double> parse_eps(const Json& block, const std::string& where, std::vector<double> fallback) {
  if (!block.is_object() || !block.contains("eps")) return fallback;
  Eigen::VectorXd e = vector_from_json(block["eps"], where + ".eps");
  require(e.size() > 0, ErrorCode::config, where + ".eps must not be empty");
  std::vector<double> out(e.data(), e.data() + e.size());
  for (double v : out) require(v > 0, ErrorCode::config, where + ".eps entries must be positive");
  return out;
}

InterfaceNormalReading parse_reading(const std::string& s, const std::string& where) {
  if (s == "n1") return InterfaceNormalReading::n1;
  if (s == "omega2_outward") return InterfaceNormalReading::omega2_outward;
  fail(ErrorCode::config, where + ": unknown reading '" + s + "' (n1 or omega2_outward)");
}

const Json& block(const Json& config, const char* key) {
  static const Json empty = Json::object();
  if (!config.contains(key)) return empty;
  const Json& b = config[key];
  require(b.is_object(), ErrorCode::config, std::string(key) + ": expected an object");
  return b;
}

RandomOptions parse_random(const Json& b, const std::string& where, bool surfaces_default) {
  RandomOptions r;
  r.modes = get_int(b, "modes", where, r.modes);
  r.vertical_degree = get_int(b, "vertical_degree", where, r.vertical_degree);
  r.include_surfaces = get_bool(b, "include_surfaces", where, surfaces_default);
  require(r.modes >= 0 && r.vertical_degree >= 0, ErrorCode::config, where + ": modes and vertical_degree must be >= 0");
  return r;
}

std::uint64_t parse_seed(const Json& b, const std::string& where, const RunOptions& opt) {
  if (opt.seed) return *opt.seed;
  if (!b.contains("seed")) return 1;
  require(b["seed"].is_number_unsigned(), ErrorCode::config, where + ".seed must be a nonnegative integer");
  return b["seed"].get<std::uint64_t>();
}

Perturbation unit(const FlowState& s, Perturbation p) {
  double n = perturbation_norm(s, p);
  require(n > 0, ErrorCode::solver, "random perturbation has zero norm");
  return p.scaled(1.0 / n);
}

Manufactured parse_and_manufacture(const Json& config, const PhysicalParams& phys) {
  const Json& m = require_key(config, "manufacture", "");
  auto psi1 = parse_stream(require_key(m, "psi1", "manufacture"), "manufacture.psi1");
  auto psi2 = parse_stream(require_key(m, "psi2", "manufacture"), "manufacture.psi2");
  auto rho1 = profile_from_json(require_key(m, "rho1", "manufacture"), "manufacture.rho1");
  auto rho2 = profile_from_json(require_key(m, "rho2", "manufacture"), "manufacture.rho2");
  double h_tilde = get_double(m, "h_tilde", "manufacture", 0.0);
  double h = get_double(m, "h", "manufacture");
  require(h_tilde > -phys.d && h > h_tilde, ErrorCode::config, "manufacture: need -d < h_tilde < h");
  ManufactureOptions mo;
  mo.knots = get_int(m, "knots", "manufacture", mo.knots);
  mo.margin = get_double(m, "margin", "manufacture", mo.margin);
  mo.degree = get_int(m, "degree", "manufacture", mo.degree);
  require(mo.knots >= 8 && mo.degree >= 4 && mo.margin >= 0, ErrorCode::config,
          "manufacture: knots >= 8, degree >= 4, margin >= 0 required");
  return manufacture_from_streamfunction(psi1, psi2, rho1, rho2, phys.g, phys.d, h_tilde, h, mo);
}

LaminarFlow parse_and_solve_laminar(const Json& config, const PhysicalParams& phys,
                                    std::shared_ptr<const LayerProfiles> l1, std::shared_ptr<const LayerProfiles> l2) {
  const Json& lj = require_key(config, "laminar", "");
  double h_tilde = get_double(lj, "h_tilde", "laminar");
  double h = get_double(lj, "h", "laminar");
  double p1 = get_double(lj, "p1", "laminar");
  double p2 = get_double(lj, "p2", "laminar");
  require(h_tilde > -phys.d && h > h_tilde, ErrorCode::config, "laminar: need -d < h_tilde < h");
  LaminarOptions lo;
  lo.degree = get_int(lj, "degree", "laminar", lo.degree);
  lo.ode_tol = positive(lj, "ode_tol", "laminar", lo.ode_tol);
  lo.max_iterations = positive_int(lj, "max_iterations", "laminar", lo.max_iterations);
  require(lo.degree >= 4 && lo.degree <= 256, ErrorCode::config, "laminar.degree must be in [4, 256]");
  return solve_laminar(std::move(l1), std::move(l2), phys.g, phys.d, h_tilde, h, p1, p2, lo);
}

FlowState lift(const LaminarFlow& flow, const PhysicalParams& phys, const GridSpec& g) {
  auto domain = build_domain(flow.d, SurfaceCurve::flat(flow.h_tilde), SurfaceCurve::flat(flow.h));
  auto grids = build_grids(domain, g.nx, g.ns1, g.ns2, g.xd);
  return lift_to_state(flow, grids, phys.P_atm, phys.c);
}

/// Optional edits to the loaded state: surfaces bent at fixed (x, sigma) values, or a
/// trace-preserving bump added to one layer's stream function.
FlowState apply_edits(FlowState state, const Json& sj) {
  if (sj.contains("transplant")) {
    const Json& t = sj["transplant"];
    Perturbation p = Perturbation::zero(state);
    if (t.contains("eta_tilde")) p.eta_tilde_p = curve_from_json(t["eta_tilde"], "state.transplant.eta_tilde");
    if (t.contains("eta")) p.eta_p = curve_from_json(t["eta"], "state.transplant.eta");
    state = perturbed_state(state, p, 1.0);
  }
  if (sj.contains("corruption")) {
    const Json& c = sj["corruption"];
    int layer = get_int(c, "layer", "state.corruption", 2);
    require(layer == 1 || layer == 2, ErrorCode::config, "state.corruption.layer must be 1 or 2");
    double amp = get_double(c, "amplitude", "state.corruption");
    int mode = get_int(c, "mode", "state.corruption", 1);
    const LayerGrid& g = state.grid(layer);
    Field& psi = layer == 1 ? state.psi1 : state.psi2;
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        double s = g.sigma(k);
        psi[g.index(j, k)] += amp * std::sin(mode * g.x(j)) * s * (1.0 - s);
      }
    state = assemble_state(state.psi1, state.psi2, state.domain, state.grids, state.p1, state.p2, state.params);
  }
  return state;
}

GravityRefs parse_refs(const Json& config, const Session& s) {
  if (!config.contains("gravity_refs")) return default_gravity_refs(*s.profiles1, *s.profiles2, s.state.p1, s.state.p2);
  const Json& r = config["gravity_refs"];
  if (r.is_string()) {
    std::string name = r.get<std::string>();
    if (name == "default") return default_gravity_refs(*s.profiles1, *s.profiles2, s.state.p1, s.state.p2);
    if (name == "consistent") return consistent_gravity_refs(*s.profiles1, *s.profiles2, s.state.p2);
    fail(ErrorCode::config, "gravity_refs: unknown choice '" + name + "' (default, consistent or {rho1, rho2})");
  }
  return GravityRefs{get_double(r, "rho1", "gravity_refs"), get_double(r, "rho2", "gravity_refs")};
}

Session build_session(const Json& config, const std::string& base_dir, bool with_maps) {
  require(config.is_object(), ErrorCode::config, "config must be a JSON object");
  std::shared_ptr<const LayerProfiles> l1, l2;
  PhysicalParams physics;
  std::optional<LaminarFlow> flow;
  std::optional<FlowState> state;
  std::vector<std::string> warnings;
  const Json& sj = block(config, "state");
  std::string source = get_string(sj, "source", "state", "laminar");
  if (source == "laminar") {
    physics = parse_physics(config);
    std::tie(l1, l2) = parse_profiles(config);
    GridSpec g = parse_grid(config);
    flow = parse_and_solve_laminar(config, physics, l1, l2);
    state = lift(*flow, physics, g);
  } else if (source == "manufactured") {
    physics = parse_physics(config);
    GridSpec g = parse_grid(config);
    Manufactured m = parse_and_manufacture(config, physics);
    l1 = m.profiles1;
    l2 = m.profiles2;
    warnings = m.warnings;
    flow = m.flow;
    state = lift(*flow, physics, g);
  } else if (source == "file") {
    std::string path = get_string(sj, "path", "state", "");
    require(!path.empty(), ErrorCode::config, "state.path is required for source 'file'");
    fs::path p(path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    std::ifstream f(p);
    require(static_cast<bool>(f), ErrorCode::config, "cannot read state file " + p.string());
    Json doc = Json::parse(f, nullptr, false);
    require(!doc.is_discarded(), ErrorCode::config, "state file " + p.string() + " is not valid JSON");
    // Outputs of the laminar / manufacture commands wrap the state in {"state": ...}.
    if (doc.contains("state") && doc["state"].is_object()) doc = doc["state"];
    std::tie(l1, l2) = parse_profiles(config);
    state = state_from_json(doc);
    physics = state->params;
  } else {
    fail(ErrorCode::config, "state.source: unknown '" + source + "' (laminar, manufactured or file)");
  }
  for (const auto* l : {l1.get(), l2.get()})
    for (const auto& w : l->check_invariants()) warnings.push_back(w);
  Session s{l1, l2, physics, std::move(flow), apply_edits(std::move(*state), sj), {}, {}, std::move(warnings)};
  if (!s.state.stagnation.ok) s.warnings.push_back("stagnation: Psi_y changes sign or vanishes");
  if (with_maps) {
    double margin = get_double(config, "map_margin", "", 0.5);
    require(margin >= 0, ErrorCode::config, "map_margin must be >= 0");
    s.maps = maps_for_state(s.state, s.profiles1, s.profiles2, margin);
    s.refs = parse_refs(config, s);
  }
  return s;
}

struct Output {
  fs::path dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& content) {
    atomic_write((dir / name).string(), content);
    files.push_back(name);
  }
};

Json header(const std::string& command, const Session& s) {
  return {{"command", command}, {"state_fingerprint", state_fingerprint(s.state)}, {"warnings", s.warnings}};
}

std::string f17(double v) { return format_double(v); }

std::string cmd_laminar(const Json& config, Output& out) {
  Session s = build_session(config, ".", false);
  const LaminarFlow& flow = *s.flow;
  Json doc = header("laminar", s);
  doc["flow"] = laminar_to_json(flow);
  doc["state"] = state_to_json(s.state);
  for (const auto& w : flow.warnings) doc["warnings"].push_back(w);

  std::optional<PhysicalFields> phys;
  try {
    phys = recover_physical(s.state, *s.profiles1, *s.profiles2);
  } catch (const Error& e) {
    doc["warnings"].push_back(std::string("pressure not reconstructed: ") + e.what());
  }
  CsvWriter csv({"y", "psi1", "psi2", "u_minus_c", "P"});
  for (int layer : {1, 2}) {
    const LayerGrid& g = s.state.grid(layer);
    const ChebProfile& prof = layer == 1 ? flow.psi1 : flow.psi2;
    const LayerProfiles& lp = layer == 1 ? *s.profiles1 : *s.profiles2;
    for (int k = 0; k < g.ns(); ++k) {
      double y = g.y(0, k);
      double psi = s.state.psi(layer)[g.index(0, k)];
      double umc = prof.d1(y) / std::sqrt(lp.rho_at(-psi));
      std::string P = phys ? f17(phys->P[layer - 1][g.index(0, k)]) : "";
      csv.row({f17(y), layer == 1 ? f17(psi) : "", layer == 2 ? f17(psi) : "", f17(umc), P});
    }
  }
  out.write("laminar.json", dump_json(doc));
  out.write("profile.csv", csv.str());
  std::ostringstream msg;
  msg << "laminar: Q1 = " << format_double(flow.Q1) << ", Q2 = " << format_double(flow.Q2)
      << (flow.stagnation ? " (stagnation)" : "");
  return msg.str();
}

std::string cmd_manufacture(const Json& config, Output& out) {
  Json cfg = config;
  cfg["state"]["source"] = "manufactured";
  Session s = build_session(cfg, ".", false);
  const LaminarFlow& flow = *s.flow;
  ResidualReport res = pde_residual(s.state, *s.profiles1, *s.profiles2);
  Json doc = header("manufacture", s);
  doc["flow"] = laminar_to_json(flow);
  doc["profiles"] = {{"layer1", layer_profiles_to_json(*s.profiles1)}, {"layer2", layer_profiles_to_json(*s.profiles2)}};
  doc["residual"] = residual_to_json(res, false);
  doc["state"] = state_to_json(s.state);
  doc["degenerate"] = false;
  for (const auto& w : s.warnings)
    if (w.find("degenerate") != std::string::npos) doc["degenerate"] = true;
  out.write("manufacture.json", dump_json(doc));
  for (int layer : {1, 2}) {
    const LayerProfiles& lp = layer == 1 ? *s.profiles1 : *s.profiles2;
    CsvWriter csv({"q", "beta"});
    if (lp.beta.kind() == ScalarProfile::Kind::tabulated) {
      for (std::size_t i = 0; i < lp.beta.knots().size(); ++i)
        csv.row({f17(lp.beta.knots()[i]), f17(lp.beta.values()[i])});
    }
    out.write("beta" + std::to_string(layer) + ".csv", csv.str());
  }
  return "manufacture: interior residual max " + format_double(std::max(res.interior_1.max, res.interior_2.max));
}

std::string cmd_residual(const Json& config, const std::string& base_dir, Output& out) {
  Session s = build_session(config, base_dir, false);
  ResidualReport res = pde_residual(s.state, *s.profiles1, *s.profiles2);
  const Json& b = block(config, "residual");
  Json doc = header("residual", s);
  doc["residual"] = residual_to_json(res, get_bool(b, "include_fields", "residual", false));
  out.write("residual.json", dump_json(doc));
  CsvWriter csv({"x", "surface_bernoulli_res", "interface_bernoulli_res"});
  for (int j = 0; j < s.state.nx(); ++j)
    csv.row({f17(s.state.grids.layer1.x(j)), f17(res.surface_bernoulli_res[j]), f17(res.interface_bernoulli_res[j])});
  out.write("residual_lines.csv", csv.str());
  return "residual: max norm " + format_double(res.max_norm());
}

std::string cmd_audit_grad(const Json& config, const std::string& base_dir, const RunOptions& opt, Output& out) {
  const Json& b = block(config, "audit");
  AuditOptions ao;
  ao.n_trials = positive_int(b, "n_trials", "audit", ao.n_trials);
  ao.seed = parse_seed(b, "audit", opt);
  ao.tol_grad = positive(b, "tol_grad", "audit", ao.tol_grad);
  ao.tol_res = positive(b, "tol_res", "audit", ao.tol_res);
  ao.random = parse_random(b, "audit", true);
  ao.threads = opt.threads;
  std::vector<double> eps = parse_eps(b, "audit", {1e-3, 5e-4, 2.5e-4});
  int fd_dirs = get_int(b, "fd_directions", "audit", 3);
  require(fd_dirs >= 0, ErrorCode::config, "audit.fd_directions must be >= 0");
  RandomOptions fd_random = ao.random;
  fd_random.include_surfaces = get_bool(b, "fd_include_surfaces", "audit", false);

  Session s = build_session(config, base_dir, true);
  AuditReport rep = audit_criticality(s.state, s.maps, s.refs, ao);
  std::vector<GradientCheckRow> rows;
  for (int i = 0; i < fd_dirs; ++i) {
    std::uint64_t seed = ao.seed + static_cast<std::uint64_t>(i);
    Perturbation p = unit(s.state, random_admissible(seed, s.state, fd_random));
    auto r = gradient_check(s.state, s.maps, s.refs, p, eps, seed);
    rows.insert(rows.end(), r.begin(), r.end());
  }

  Json doc = header("audit-grad", s);
  doc["audit"] = audit_to_json(rep);
  doc["gradient_check"] = gradient_rows_to_json(rows);
  doc["gravity_refs"] = {{"rho1", s.refs.rho1}, {"rho2", s.refs.rho2}};
  out.write("audit.json", dump_json(doc));

  CsvWriter trials({"trial", "pert_norm", "dH1", "dH2", "dH3", "dH4", "total", "normalized"});
  for (std::size_t t = 0; t < rep.trials.size(); ++t) {
    const auto& tr = rep.trials[t];
    trials.row({std::to_string(t), f17(tr.pert_norm), f17(tr.variation.dH1), f17(tr.variation.dH2),
                f17(tr.variation.dH3), f17(tr.variation.dH4), f17(tr.variation.total), f17(tr.normalized)});
  }
  out.write("audit_trials.csv", trials.str());
  CsvWriter grad({"seed", "eps", "analytic", "fd", "abs_err", "order_est"});
  for (const auto& r : rows)
    grad.row({std::to_string(r.seed), f17(r.eps), f17(r.analytic), f17(r.fd), f17(r.abs_err), f17(r.order_est)});
  out.write("gradient_check.csv", grad.str());
  return "audit-grad: verdict " + rep.verdict();
}

std::string cmd_audit_hess(const Json& config, const std::string& base_dir, const RunOptions& opt, Output& out) {
  const Json& b = block(config, "hessian");
  int pairs = positive_int(b, "pairs", "hessian", 10);
  std::uint64_t seed = parse_seed(b, "hessian", opt);
  std::vector<double> eps = parse_eps(b, "hessian", {1e-3, 5e-4, 2.5e-4});
  RandomOptions ro = parse_random(b, "hessian", false);
  std::string reading_name = get_string(b, "reading", "hessian", "both");
  std::vector<InterfaceNormalReading> readings;
  if (reading_name == "both") readings = {InterfaceNormalReading::n1, InterfaceNormalReading::omega2_outward};
  else readings = {parse_reading(reading_name, "hessian.reading")};

  Session s = build_session(config, base_dir, true);
  const ResidualReport res = pde_residual(s.state, *s.profiles1, *s.profiles2);

  // FD side, shared by both readings.
  std::vector<Perturbation> A, B;
  std::vector<std::vector<double>> fd(pairs);
  for (int i = 0; i < pairs; ++i) {
    A.push_back(unit(s.state, random_admissible(seed + 2 * static_cast<std::uint64_t>(i), s.state, ro)));
    B.push_back(unit(s.state, random_admissible(seed + 2 * static_cast<std::uint64_t>(i) + 1, s.state, ro)));
    for (double e : eps) fd[i].push_back(fd_second_variation(s.state, s.maps, s.refs, A[i], B[i], e));
  }

  Json doc = header("audit-hess", s);
  doc["residual_max"] = res.max_norm();
  doc["eps"] = eps;
  doc["include_surfaces"] = ro.include_surfaces;
  CsvWriter csv({"pair", "reading", "eps", "analytic", "fd", "rel_err"});
  Json per_reading = Json::object();
  const auto& labels = second_variation_term_labels();
  for (auto reading : readings) {
    const SecondVariation sv(s.state, s.maps, s.refs, reading);
    double max_asym = 0.0, max_lit_asym = 0.0, max_rel_finest = 0.0;
    Json pair_docs = Json::array();
    for (int i = 0; i < pairs; ++i) {
      Perturbation a = A[i], bb = B[i];
      if (ro.include_surfaces) {
        a = eulerian_perturbation(s.state, a);
        bb = eulerian_perturbation(s.state, bb);
      }
      double ab = sv(a, bb), ba = sv(bb, a);
      SecondVariationTerms lab = sv.literal_terms(a, bb), lba = sv.literal_terms(bb, a);
      double scale = std::max({std::abs(ab), std::abs(ba), 1e-300});
      max_asym = std::max(max_asym, std::abs(ab - ba) / scale);
      max_lit_asym = std::max(max_lit_asym, std::abs(lab.total - lba.total) / std::max(std::abs(lab.total), 1e-300));
      Json errs = Json::array();
      for (std::size_t e = 0; e < eps.size(); ++e) {
        double rel = std::abs(ab - fd[i][e]) / std::max(std::abs(ab), 1e-300);
        errs.push_back(rel);
        csv.row({std::to_string(i), to_string(reading), f17(eps[e]), f17(ab), f17(fd[i][e]), f17(rel)});
      }
      max_rel_finest = std::max(max_rel_finest, errs.back().get<double>());
      Json terms = Json::object();
      for (int t = 0; t < 12; ++t) terms[labels[t]] = 0.5 * (lab.boundary[t] + lba.boundary[t]);
      terms["interior_1"] = 0.5 * (lab.interior[0] + lba.interior[0]);
      terms["interior_2"] = 0.5 * (lab.interior[1] + lba.interior[1]);
      pair_docs.push_back({{"pair", i}, {"analytic", ab}, {"fd", fd[i]}, {"rel_err", errs}, {"terms", terms}});
    }
    per_reading[to_string(reading)] = {{"max_rel_asymmetry", max_asym},
                                       {"max_literal_asymmetry", max_lit_asym},
                                       {"max_rel_err_finest_eps", max_rel_finest},
                                       {"pairs", pair_docs}};
  }
  doc["readings"] = per_reading;
  out.write("hess_audit.json", dump_json(doc));
  out.write("hess_check.csv", csv.str());
  std::ostringstream msg;
  msg << "audit-hess: " << pairs << " pairs";
  for (auto& [k, v] : per_reading.items())
    msg << ", " << k << " max rel err " << format_double(v["max_rel_err_finest_eps"].get<double>());
  return msg.str();
}

std::string cmd_stability(const Json& config, const std::string& base_dir, const RunOptions& opt, Output& out) {
  const Json& b = block(config, "stability");
  StabilityOptions so;
  so.basis.fourier_modes = get_int(b, "fourier_modes", "stability", so.basis.fourier_modes);
  so.basis.vertical_count = positive_int(b, "vertical_count", "stability", so.basis.vertical_count);
  so.basis.restrict_surfaces = get_bool(b, "restrict_surfaces", "stability", true);
  if (b.contains("basis_size")) so.basis.basis_size = positive_int(b, "basis_size", "stability", 0);
  require(so.basis.fourier_modes >= 0, ErrorCode::config, "stability.fourier_modes must be >= 0");
  so.tol_psd = positive(b, "tol_psd", "stability", so.tol_psd);
  so.tol_res = positive(b, "tol_res", "stability", so.tol_res);
  so.reading = parse_reading(get_string(b, "reading", "stability", "n1"), "stability.reading");
  so.threads = opt.threads;

  Session s = build_session(config, base_dir, true);
  HessianMatrix H;
  StabilityVerdict v = stability_verdict(s.state, s.maps, s.refs, so, &H);
  Json doc = header("stability", s);
  doc["stability"] = verdict_to_json(v);
  doc["reading"] = to_string(so.reading);
  doc["restrict_surfaces"] = so.basis.restrict_surfaces;
  out.write("verdict.json", dump_json(doc));
  CsvWriter csv({"index", "eigenvalue"});
  for (Eigen::Index i = 0; i < v.eigenvalues.size(); ++i) csv.row({std::to_string(i), f17(v.eigenvalues[i])});
  out.write("spectrum.csv", csv.str());
  if (H.entries.size() > 0) {
    out.write("hessian.json", dump_json(hessian_to_json(H, "hessian.bin")));
    out.write("hessian.bin", hessian_sidecar(H));
  }
  return std::string("stability: ") + to_string(v.verdict) + ", lambda_min " + format_double(v.lambda_min);
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Session load_session(const Json& config, const std::string& base_dir) { return build_session(config, base_dir, true); }

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"laminar", "audit-grad", "audit-hess", "stability", "manufacture",
                                              "residual"};
  return names;
}

int exit_code_for(ErrorCode code) noexcept { return code == ErrorCode::config ? 2 : 3; }

RunResult run_command(const std::string& command, const Json& config, const std::string& out_dir,
                      const RunOptions& options, const std::string& base_dir) {
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  try {
    require(std::find(command_names().begin(), command_names().end(), command) != command_names().end(),
            ErrorCode::config, "unknown command '" + command + "'");
    require(config.is_object(), ErrorCode::config, "config must be a JSON object");
    std::string declared = get_string(config, "command", "", "");
    require(declared == command, ErrorCode::config,
            "config declares command '" + declared + "' but '" + command + "' was requested");
    require(options.threads >= 1 && options.threads <= 256, ErrorCode::config, "threads must be in [1, 256]");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec && fs::is_directory(out_dir), ErrorCode::config, "cannot create output directory " + out_dir);
    Output out{fs::path(out_dir), {}};
    if (command == "laminar") result.message = cmd_laminar(config, out);
    else if (command == "manufacture") result.message = cmd_manufacture(config, out);
    else if (command == "residual") result.message = cmd_residual(config, base_dir, out);
    else if (command == "audit-grad") result.message = cmd_audit_grad(config, base_dir, options, out);
    else if (command == "audit-hess") result.message = cmd_audit_hess(config, base_dir, options, out);
    else result.message = cmd_stability(config, base_dir, options, out);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json meta = {{"command", command}, {"finished_utc", utc_now()}, {"elapsed_seconds", elapsed},
                 {"threads", options.threads}, {"outputs", out.files}};
    atomic_write((out.dir / "run_meta.json").string(), dump_json(meta));
    result.outputs = out.files;
    result.exit_code = 0;
  } catch (const Error& e) {
    result.exit_code = exit_code_for(e.code());
    result.message = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const Json::exception& e) {
    result.exit_code = 2;
    result.message = std::string("config: ") + e.what();
  } catch (const std::exception& e) {
    result.exit_code = 3;
    result.message = std::string("internal: ") + e.what();
  }
  return result;
}

RunResult run_command_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                           const RunOptions& options) {
  std::ifstream f(config_path);
  if (!f) return {2, "config: cannot read " + config_path, {}};
  Json config = Json::parse(f, nullptr, false);
  if (config.is_discarded()) return {2, "config: " + config_path + " is not valid JSON", {}};
  std::string base = fs::path(config_path).parent_path().string();
  return run_command(command, config, out_dir, options, base.empty() ? "." : base);
}

}  // namespace stratwave
