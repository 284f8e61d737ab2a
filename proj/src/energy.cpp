#include "stratwave/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "parallel.hpp"

namespace stratwave {

using std::numbers::pi;

GravityRefs default_gravity_refs(const LayerProfiles& l1, const LayerProfiles& l2, double p1, double p2) {
  return {l1.rho_at(p1), l2.rho_at(p2)};
}

GravityRefs consistent_gravity_refs(const LayerProfiles& l1, const LayerProfiles& l2, double p2) {
  return {l1.rho_at(0.0) - l2.rho_at(0.0) + l2.rho_at(p2), l2.rho_at(p2)};
}

namespace {

Interval widen(Interval iv, double margin, double floor_width) {
  const double w = std::max(iv.width(), floor_width) * margin;
  return {iv.lo - w, iv.hi + w};
}

Interval clip_p_window(const LayerProfiles& pr, Interval p) {
  const double lo = std::max({p.lo, pr.s_range.lo, -pr.q_range.hi});
  const double hi = std::min({p.hi, pr.s_range.hi, -pr.q_range.lo});
  require(lo < hi, ErrorCode::domain, "profile ranges do not cover the stream-function image");
  return {lo, hi};
}

}  // namespace

BernoulliMaps maps_for_state(const FlowState& state, std::shared_ptr<const LayerProfiles> l1,
                             std::shared_ptr<const LayerProfiles> l2, double margin) {
  double ytop = -std::numeric_limits<double>::infinity();
  const LayerGrid& g2 = state.grids.layer2;
  for (int j = 0; j < g2.nx(); ++j) ytop = std::max(ytop, g2.y(j, g2.ns() - 1));
  const Interval y = widen({-state.params.d, ytop}, margin, 1e-3);
  Interval p1{0.0, 0.0}, p2{std::min(0.0, state.p2), std::max(0.0, state.p2)};
  for (int i = 0; i < state.psi1.size(); ++i) {
    p1.lo = std::min(p1.lo, -state.psi1[i]);
    p1.hi = std::max(p1.hi, -state.psi1[i]);
  }
  for (int i = 0; i < state.psi2.size(); ++i) {
    p2.lo = std::min(p2.lo, -state.psi2[i]);
    p2.hi = std::max(p2.hi, -state.psi2[i]);
  }
  // Vorticities far from a solution may need p beyond the stream-function image:
  // widen until every nodal Laplacian (both discretisations) is invertible.
  Field lap[2][2];
  for (int layer = 1; layer <= 2; ++layer) {
    lap[layer - 1][0] = energy_laplacian(state.grid(layer), state.psi(layer));
    lap[layer - 1][1] = mapped_laplacian(state.grid(layer), state.psi(layer));
  }
  auto covered = [&](const BernoulliMaps& maps) {
    for (int layer = 1; layer <= 2; ++layer) {
      const LayerGrid& g = state.grid(layer);
      for (int j = 0; j < g.nx(); ++j)
        for (int k = 0; k < g.ns(); ++k)
          for (const Field& m : lap[layer - 1])
            if (!maps[layer].in_window(g.y(j, k), m[g.index(j, k)])) return false;
    }
    return true;
  };
  double m = margin;
  for (int attempt = 0;; ++attempt, m = 2.0 * m + 0.5) {
    const MapWindow w1{y, clip_p_window(*l1, widen(p1, m, 1e-2))};
    const MapWindow w2{y, clip_p_window(*l2, widen(p2, m, 1e-2))};
    BernoulliMaps maps = build_bernoulli_maps(l1, l2, state.params.g, state.p2, w1, w2);
    if (attempt == 6 || covered(maps)) return maps;
  }
}

// ---------------------------------------------------------------------------

EnergyTerms eval_H_terms(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs) {
  EnergyTerms t;
  const PhysicalParams& P = state.params;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Field& psi = state.psi(layer);
    const BernoulliMap& F = maps[layer];
    const Field m = energy_laplacian(g, psi);
    const double rho_ref = layer == 1 ? refs.rho1 : refs.rho2;
    const double q = layer == 1 ? P.Q1 + P.Q2 : P.Q2;
    double grav = 0.0, cst = 0.0, bern = 0.0;
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const double w = g.area_weight(j, k), y = g.y(j, k);
        grav += w * P.g * rho_ref * (y + P.d);
        cst -= w * q;
        bern -= w * F.F(y, m[g.index(j, k)]);
      }
    const int i = layer - 1;
    t.dirichlet[i] = 0.5 * gradient_energy(g, psi, psi);
    t.gravity[i] = grav;
    t.constant[i] = cst;
    t.bernoulli[i] = bern;
  }
  t.total = 0.0;
  for (int i = 0; i < 2; ++i) t.total += t.dirichlet[i] + t.gravity[i] + t.constant[i] + t.bernoulli[i];
  return t;
}

double eval_H(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs) {
  return eval_H_terms(state, maps, refs).total;
}

FlowState perturbed_state(const FlowState& state, const Perturbation& pert, double eps) {
  FlowDomain dom = build_domain(state.domain.d, state.domain.eta_tilde + pert.eta_tilde_p.scaled(eps),
                                state.domain.eta + pert.eta_p.scaled(eps));
  const LayerGrid& g1 = state.grids.layer1;
  LayerGrids grids = build_grids(dom, g1.nx(), g1.ns(), state.grids.layer2.ns(), g1.x_derivative());
  FlowState out{std::move(dom), std::move(grids), state.psi1 + eps * pert.psi1p, state.psi2 + eps * pert.psi2p,
                state.p1, state.p2, state.params, 0.0, {}};
  out.trace_error = dirichlet_trace_error(out.grids, out.psi1, out.psi2, out.p1, out.p2);
  return out;
}

// ---------------------------------------------------------------------------

double ResidualReport::max_norm() const {
  return std::max({interior_1.max, interior_2.max, surface_bernoulli.max, interface_bernoulli.max,
                   dirichlet_bottom, dirichlet_interface, dirichlet_surface});
}

namespace {

NormPair area_norms(const LayerGrid& g, const Field& r) {
  double s = 0.0, area = 0.0, mx = 0.0;
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) {
      const double w = g.area_weight(j, k), v = r[g.index(j, k)];
      s += w * v * v;
      area += w;
      mx = std::max(mx, std::abs(v));
    }
  return {std::sqrt(s / area), mx};
}

NormPair line_norms(const LineField& r) {
  double s = 0.0, mx = 0.0;
  for (int j = 0; j < r.size(); ++j) {
    s += r[j] * r[j];
    mx = std::max(mx, std::abs(r[j]));
  }
  return {std::sqrt(s / r.size()), mx};
}

}  // namespace

ResidualReport pde_residual(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2) {
  ResidualReport rep;
  const PhysicalParams& P = state.params;
  Gradient grad[2];
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Field& psi = state.psi(layer);
    const LayerProfiles& pr = layer == 1 ? l1 : l2;
    const Field lap = mapped_laplacian(g, psi);
    Field r(g.size());
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const int i = g.index(j, k);
        r[i] = lap[i] - P.g * g.y(j, k) * pr.rho_prime(-psi[i]) + pr.beta_at(psi[i]);
      }
    grad[layer - 1] = mapped_gradient(g, psi);
    if (layer == 1) {
      rep.interior_1 = area_norms(g, r);
      rep.interior_res_1 = std::move(r);
    } else {
      rep.interior_2 = area_norms(g, r);
      rep.interior_res_2 = std::move(r);
    }
  }
  const LayerGrid& g1 = state.grids.layer1;
  const LayerGrid& g2 = state.grids.layer2;
  const int n1 = g1.ns() - 1, n2 = g2.ns() - 1;
  const int nx = g1.nx();
  rep.surface_bernoulli_res.resize(nx);
  rep.interface_bernoulli_res.resize(nx);
  const double jump = P.g * (l1.rho_at(0.0) - l2.rho_at(0.0));
  for (int j = 0; j < nx; ++j) {
    const int top = g2.index(j, n2);
    const double ys = g2.y(j, n2);
    const double k2 = 0.5 * (grad[1].x[top] * grad[1].x[top] + grad[1].y[top] * grad[1].y[top]);
    rep.surface_bernoulli_res[j] = k2 + P.g * l2.rho_at(-state.psi2[top]) * (ys + P.d) - P.Q2;

    const int a = g1.index(j, n1), b = g2.index(j, 0);
    const double yi = g1.y(j, n1);
    const double k1 = 0.5 * (grad[0].x[a] * grad[0].x[a] + grad[0].y[a] * grad[0].y[a]);
    const double k2i = 0.5 * (grad[1].x[b] * grad[1].x[b] + grad[1].y[b] * grad[1].y[b]);
    rep.interface_bernoulli_res[j] = k1 - k2i + jump * (yi + P.d) - P.Q1;

    rep.dirichlet_bottom = std::max(rep.dirichlet_bottom, std::abs(state.psi1[g1.index(j, 0)] + state.p1));
    rep.dirichlet_interface =
        std::max({rep.dirichlet_interface, std::abs(state.psi1[a]), std::abs(state.psi2[b])});
    rep.dirichlet_surface = std::max(rep.dirichlet_surface, std::abs(state.psi2[top] + state.p2));
  }
  rep.surface_bernoulli = line_norms(rep.surface_bernoulli_res);
  rep.interface_bernoulli = line_norms(rep.interface_bernoulli_res);
  return rep;
}

// ---------------------------------------------------------------------------

VariationBreakdown first_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                                   const Perturbation& pert, const VariationOptions& options) {
  require(pert.psi1p.size() == state.psi1.size() && pert.psi2p.size() == state.psi2.size(), ErrorCode::size,
          "perturbation does not match the state grids");
  if (options.check_admissible) {
    const auto [cb, cs] = constraint_integrals(state, pert);
    const double tol = options.constraint_tol * std::max(perturbation_norm(state, pert), 1.0);
    if (std::abs(cb) > tol || std::abs(cs) > tol) {
      std::ostringstream os;
      os << "perturbation is not admissible: bottom flux " << cb << ", surface flux " << cs;
      fail(ErrorCode::admissibility, os.str());
    }
  }
  const PhysicalParams& P = state.params;
  const FlowDomain& dom = state.domain;
  const LayerGrid& g1 = state.grids.layer1;
  const LayerGrid& g2 = state.grids.layer2;
  VariationBreakdown v;

  // dH1: area terms, layer 1 then layer 2.
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Field& psi = state.psi(layer);
    const Field m = energy_laplacian(g, psi);
    const Field mp = energy_laplacian(g, pert.psi(layer));
    const BernoulliMap& F = maps[layer];
    double s = 0.0;
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const int i = g.index(j, k);
        s += g.area_weight(j, k) * (psi[i] + F.d2F(g.y(j, k), m[i])) * mp[i];
      }
    v.dH1 -= s;
  }

  const int nx = g1.nx();
  const double wx = 2 * pi / nx;
  const Gradient gr1 = mapped_gradient(g1, state.psi1);
  const Gradient gr2 = mapped_gradient(g2, state.psi2);
  const Field om1 = mapped_laplacian(g1, state.psi1);
  const Field om2 = mapped_laplacian(g2, state.psi2);
  const int n1 = g1.ns() - 1, n2 = g2.ns() - 1;

  // dH2: surface Bernoulli integrand times eta_p, dx.
  if (!pert.eta_p.is_flat() || pert.eta_p.mean() != 0.0) {
    double s = 0.0;
    for (int j = 0; j < nx; ++j) {
      const int i = g2.index(j, n2);
      const double y = g2.y(j, n2);
      const double kin = 0.5 * (gr2.x[i] * gr2.x[i] + gr2.y[i] * gr2.y[i]);
      const double f = kin + P.g * refs.rho2 * (y + P.d) - P.Q2 - maps[2].F(y, om2[i]);
      s += f * pert.eta_p.value(g2.x(j));
    }
    v.dH2 = s * wx;
  }

  // dH3: boundary traces, in the order S, S~ (layer 2), S~ (layer 1), B.
  {
    const auto term = [&](const LayerGrid& g, const Field& psi, const Field& psip, Boundary b, Measure meas) {
      const LineField t = boundary_trace(g, psi, b);
      const LineField dn = boundary_normal_derivative(g, psip, b);
      return line_integral(dom, t.cwiseProduct(dn), b, meas);
    };
    v.dH3 = term(g2, state.psi2, pert.psi2p, Boundary::surface, Measure::dl);
    v.dH3 -= term(g2, state.psi2, pert.psi2p, Boundary::interface, Measure::dl);
    v.dH3 += term(g1, state.psi1, pert.psi1p, Boundary::interface, Measure::dl);
    v.dH3 -= term(g1, state.psi1, pert.psi1p, Boundary::bottom, Measure::dx);
  }

  // dH4: interface jump integrand times eta_tilde_p, dx.
  if (!pert.eta_tilde_p.is_flat() || pert.eta_tilde_p.mean() != 0.0) {
    const LayerProfiles& l1 = maps[1].profiles();
    const LayerProfiles& l2 = maps[2].profiles();
    const double jump = P.g * (l1.rho_at(0.0) - l2.rho_at(0.0));
    double s = 0.0;
    for (int j = 0; j < nx; ++j) {
      const int a = g1.index(j, n1), b = g2.index(j, 0);
      const double y = g1.y(j, n1);
      const double k1 = gr1.x[a] * gr1.x[a] + gr1.y[a] * gr1.y[a];
      const double k2 = gr2.x[b] * gr2.x[b] + gr2.y[b] * gr2.y[b];
      const double f = 0.5 * (k1 - k2) + jump * (y + P.d) - maps[1].F(y, om1[a]) + maps[2].F(y, om2[b]) - P.Q1;
      s += f * pert.eta_tilde_p.value(g1.x(j));
    }
    v.dH4 = s * wx;
  }
  v.total = v.dH1 + v.dH2 + v.dH3 + v.dH4;
  return v;
}

Perturbation eulerian_perturbation(const FlowState& state, const Perturbation& pert) {
  if (!pert.moves_surfaces()) return pert;
  Perturbation out = pert;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Gradient gr = mapped_gradient(g, state.psi(layer));
    Field& f = layer == 1 ? out.psi1p : out.psi2p;
    for (int j = 0; j < g.nx(); ++j) {
      const double et = pert.eta_tilde_p.value(g.x(j));
      const double e = pert.eta_p.value(g.x(j));
      for (int k = 0; k < g.ns(); ++k) {
        const double s = g.sigma(k);
        const double dy = layer == 1 ? s * et : (1 - s) * et + s * e;
        const int i = g.index(j, k);
        f[i] -= gr.y[i] * dy;
      }
    }
  }
  return out;
}

double fd_first_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                          const Perturbation& pert, double eps) {
  require(eps > 0.0, ErrorCode::config, "eps must be positive");
  const double hp = eval_H(perturbed_state(state, pert, eps), maps, refs);
  const double hm = eval_H(perturbed_state(state, pert, -eps), maps, refs);
  return (hp - hm) / (2 * eps);
}

std::vector<GradientCheckRow> gradient_check(const FlowState& state, const BernoulliMaps& maps,
                                             const GravityRefs& refs, const Perturbation& pert,
                                             const std::vector<double>& eps_list, std::uint64_t seed) {
  require(!eps_list.empty(), ErrorCode::config, "eps list must not be empty");
  VariationOptions vo;
  vo.check_admissible = false;
  const double analytic = first_variation(state, maps, refs, eulerian_perturbation(state, pert), vo).total;
  std::vector<GradientCheckRow> rows;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    GradientCheckRow r;
    r.seed = seed;
    r.eps = eps_list[i];
    r.analytic = analytic;
    r.fd = fd_first_variation(state, maps, refs, pert, r.eps);
    r.abs_err = std::abs(r.fd - r.analytic);
    r.order_est = std::numeric_limits<double>::quiet_NaN();
    if (i > 0 && rows.back().abs_err > 0 && r.abs_err > 0)
      r.order_est = std::log(rows.back().abs_err / r.abs_err) / std::log(rows.back().eps / r.eps);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::string AuditReport::verdict() const {
  if (critical && solution) return "CRITICAL+SOLUTION";
  if (critical) return "CRITICAL";
  if (solution) return "SOLUTION";
  return "NEITHER";
}

AuditReport audit_criticality(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                              const AuditOptions& options) {
  require(options.n_trials >= 1, ErrorCode::config, "n_trials must be at least 1");
  require(options.tol_grad > 0 && options.tol_res > 0, ErrorCode::config, "tolerances must be positive");
  AuditReport rep;
  rep.tol_grad = options.tol_grad;
  rep.tol_res = options.tol_res;
  rep.trials.resize(options.n_trials);
  detail::parallel_for(options.n_trials, options.threads, [&](int t) {
    AuditTrial& tr = rep.trials[t];
    tr.seed = options.seed + static_cast<std::uint64_t>(t);
    const Perturbation p = random_admissible(tr.seed, state, options.random);
    tr.pert_norm = perturbation_norm(state, p);
    tr.variation = first_variation(state, maps, refs, p);
    tr.normalized = tr.pert_norm > 0 ? std::abs(tr.variation.total) / tr.pert_norm : 0.0;
  });
  for (const auto& tr : rep.trials) rep.max_normalized = std::max(rep.max_normalized, tr.normalized);
  rep.residual = pde_residual(state, maps[1].profiles(), maps[2].profiles());
  rep.residual_max = rep.residual.max_norm();
  rep.critical = rep.max_normalized <= options.tol_grad;
  rep.solution = rep.residual_max <= options.tol_res;
  rep.critical_implies_solution = !rep.critical || rep.solution;
  rep.solution_implies_critical = !rep.solution || rep.critical;
  return rep;
}

}  // namespace stratwave
