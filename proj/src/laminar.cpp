#include "stratwave/laminar.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stratwave {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// Chebyshev-Lobatto interpolation

namespace {

Eigen::VectorXd lobatto_weights(int n) {
  Eigen::VectorXd w(n + 1);
  for (int j = 0; j <= n; ++j) w[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
  return w;
}

}  // namespace

Eigen::VectorXd ChebProfile::nodes(double a, double b, int degree) {
  require(degree >= 2, ErrorCode::config, "Chebyshev degree must be at least 2");
  Eigen::VectorXd y(degree + 1);
  for (int j = 0; j <= degree; ++j) y[j] = a + 0.5 * (b - a) * (1.0 - std::cos(pi * j / degree));
  y[0] = a;
  y[degree] = b;
  return y;
}

Eigen::MatrixXd ChebProfile::diff_matrix(double a, double b, int degree) {
  const int n = degree;
  Eigen::VectorXd t(n + 1);
  for (int j = 0; j <= n; ++j) t[j] = -std::cos(pi * j / n);
  const Eigen::VectorXd w = lobatto_weights(n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    double diag = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      D(i, j) = (w[j] / w[i]) / (t[i] - t[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D * (2.0 / (b - a));
}

ChebProfile::ChebProfile(double a, double b, Eigen::VectorXd values) : a_(a), b_(b), values_(std::move(values)) {
  const int n = static_cast<int>(values_.size()) - 1;
  y_ = nodes(a, b, n);
  weights_ = lobatto_weights(n);
  const Eigen::MatrixXd D = diff_matrix(a, b, n);
  d1_ = D * values_;
  d2_ = D * d1_;
}

double ChebProfile::interp(const Eigen::VectorXd& f, double y) const {
  double num = 0.0, den = 0.0;
  for (int j = 0; j < y_.size(); ++j) {
    const double diff = y - y_[j];
    if (diff == 0.0) return f[j];
    const double c = weights_[j] / diff;
    num += c * f[j];
    den += c;
  }
  return num / den;
}

// ---------------------------------------------------------------------------

void fill_bernoulli_constants(LaminarFlow& f) {
  const LayerProfiles& l1 = *f.profiles1;
  const LayerProfiles& l2 = *f.profiles2;
  const double s2 = f.psi2.d1(f.h);
  const double s1i = f.psi1.d1(f.h_tilde), s2i = f.psi2.d1(f.h_tilde);
  f.Q2 = 0.5 * s2 * s2 + f.g * l2.rho_at(f.p2) * (f.h + f.d);
  f.Q1 = 0.5 * (s1i * s1i - s2i * s2i) + f.g * (l1.rho_at(0.0) - l2.rho_at(0.0)) * (f.h_tilde + f.d);
}

namespace {

struct LayerSolve {
  ChebProfile profile;
  double residual = 0.0;
  double step = 0.0;
  int iterations = 0;
};

LayerSolve solve_layer(const LayerProfiles& pr, double g, double a, double b, double va, double vb,
                       const LaminarOptions& opt) {
  const int n = opt.degree;
  const Eigen::VectorXd y = ChebProfile::nodes(a, b, n);
  const Eigen::MatrixXd D = ChebProfile::diff_matrix(a, b, n);
  const Eigen::MatrixXd D2 = D * D;
  Eigen::VectorXd psi(n + 1);
  for (int j = 0; j <= n; ++j) psi[j] = va + (vb - va) * (y[j] - a) / (b - a);
  psi[0] = va;
  psi[n] = vb;

  auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r = D2 * p;
    r[0] = 0.0;
    r[n] = 0.0;
    for (int i = 1; i < n; ++i) r[i] -= g * y[i] * pr.rho_prime(-p[i]) - pr.beta_at(p[i]);
    return r;
  };

  LayerSolve out;
  Eigen::VectorXd r = residual(psi);
  double rn = r.lpNorm<Eigen::Infinity>();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd J = D2;
    J.row(0).setZero();
    J.row(n).setZero();
    J(0, 0) = 1.0;
    J(n, n) = 1.0;
    for (int i = 1; i < n; ++i) J(i, i) -= -g * y[i] * pr.rho_second(-psi[i]) - pr.beta_prime(psi[i]);
    const Eigen::VectorXd delta = J.partialPivLu().solve(-r);
    if (!delta.allFinite()) fail(ErrorCode::solver, "laminar Newton step is not finite");
    double t = 1.0;
    Eigen::VectorXd trial;
    double tn = 0.0;
    for (int h = 0; h < 30; ++h, t *= 0.5) {
      trial = psi + t * delta;
      tn = residual(trial).lpNorm<Eigen::Infinity>();
      if (std::isfinite(tn) && tn <= rn * (1.0 - 1e-4 * t)) break;
      if (std::isfinite(tn) && rn < 1e-6 && t == 1.0) break;  // at roundoff level the full step is accepted
    }
    psi = trial;
    r = residual(psi);
    rn = r.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    out.step = (t * delta).lpNorm<Eigen::Infinity>();
    if (out.step <= opt.ode_tol * 1e-2 * std::max(1.0, psi.lpNorm<Eigen::Infinity>())) break;
  }
  if (!(out.step <= opt.ode_tol * std::max(1.0, psi.lpNorm<Eigen::Infinity>()))) {
    std::ostringstream os;
    os << "laminar Newton iteration did not converge (last step " << out.step << ", residual " << rn << ")";
    fail(ErrorCode::solver, os.str());
  }
  out.residual = rn;
  psi[0] = va;
  psi[n] = vb;
  out.profile = ChebProfile(a, b, psi);
  return out;
}

bool sign_change(const ChebProfile& p, int samples) {
  int pos = 0, neg = 0;
  for (int i = 0; i <= samples; ++i) {
    const double v = p.d1(p.a() + (p.b() - p.a()) * i / samples);
    if (v > 0) ++pos;
    else if (v < 0) ++neg;
  }
  return !(pos == samples + 1 || neg == samples + 1);
}

}  // namespace

LaminarFlow solve_laminar(std::shared_ptr<const LayerProfiles> l1, std::shared_ptr<const LayerProfiles> l2, double g,
                          double d, double h_tilde, double h, double p1, double p2, const LaminarOptions& opt) {
  require(g > 0 && d > 0, ErrorCode::config, "g and d must be positive");
  require(h_tilde > -d && h_tilde < h, ErrorCode::config, "need -d < h_tilde < h");
  require(opt.degree >= 4 && opt.degree <= 256, ErrorCode::config, "Chebyshev degree must be in [4, 256]");
  require(opt.ode_tol > 0, ErrorCode::config, "ode_tol must be positive");
  LaminarFlow f;
  f.g = g;
  f.d = d;
  f.h_tilde = h_tilde;
  f.h = h;
  f.p1 = p1;
  f.p2 = p2;
  f.profiles1 = l1;
  f.profiles2 = l2;
  const LayerSolve s1 = solve_layer(*l1, g, -d, h_tilde, -p1, 0.0, opt);
  const LayerSolve s2 = solve_layer(*l2, g, h_tilde, h, 0.0, -p2, opt);
  f.psi1 = s1.profile;
  f.psi2 = s2.profile;
  f.ode_residual = std::max(s1.residual, s2.residual);
  f.newton_iterations = s1.iterations + s2.iterations;
  fill_bernoulli_constants(f);
  f.stagnation = sign_change(f.psi1, 400) || sign_change(f.psi2, 400);
  if (f.stagnation) f.warnings.push_back("stagnation: psi' vanishes or changes sign in a layer");
  return f;
}

FlowState lift_to_state(const LaminarFlow& flow, const LayerGrids& grids, double P_atm, double c) {
  const LayerGrid& g1 = grids.layer1;
  const LayerGrid& g2 = grids.layer2;
  for (int j = 0; j < g1.nx(); ++j) {
    const bool ok = std::abs(g1.lower(j) + flow.d) <= 1e-12 && std::abs(g1.lower_x(j)) == 0.0 &&
                    std::abs(g1.thickness(j) - (flow.h_tilde + flow.d)) <= 1e-12 &&
                    std::abs(g2.lower(j) - flow.h_tilde) <= 1e-12 &&
                    std::abs(g2.thickness(j) - (flow.h - flow.h_tilde)) <= 1e-12 && g1.thickness_x(j) == 0.0 &&
                    g2.thickness_x(j) == 0.0;
    require(ok, ErrorCode::size, "grids do not describe the laminar flow's flat domain");
  }
  Field psi1(g1.size()), psi2(g2.size());
  for (int j = 0; j < g1.nx(); ++j) {
    for (int k = 0; k < g1.ns(); ++k) psi1[g1.index(j, k)] = flow.psi1.value(g1.y(j, k));
    for (int k = 0; k < g2.ns(); ++k) psi2[g2.index(j, k)] = flow.psi2.value(g2.y(j, k));
    psi1[g1.index(j, 0)] = -flow.p1;
    psi1[g1.index(j, g1.ns() - 1)] = 0.0;
    psi2[g2.index(j, 0)] = 0.0;
    psi2[g2.index(j, g2.ns() - 1)] = -flow.p2;
  }
  PhysicalParams params{flow.g, c, flow.d, P_atm, flow.Q1, flow.Q2};
  FlowDomain dom = build_domain(flow.d, SurfaceCurve::flat(flow.h_tilde), SurfaceCurve::flat(flow.h));
  return assemble_state(std::move(psi1), std::move(psi2), std::move(dom), grids, flow.p1, flow.p2, params);
}

FlowState lift_to_state(const LaminarFlow& flow, int nx, int ns1, int ns2, XDerivative xd) {
  const FlowDomain dom = build_domain(flow.d, SurfaceCurve::flat(flow.h_tilde), SurfaceCurve::flat(flow.h));
  return lift_to_state(flow, build_grids(dom, nx, ns1, ns2, xd));
}

// ---------------------------------------------------------------------------

namespace {

bool strictly_monotone(const AnalyticStream& s, double a, double b, int samples, int* sign) {
  int pos = 0, neg = 0;
  for (int i = 0; i <= samples; ++i) {
    const double v = s.d1(a + (b - a) * i / samples);
    if (v > 0) ++pos;
    else if (v < 0) ++neg;
  }
  *sign = pos > neg ? 1 : -1;
  return pos == samples + 1 || neg == samples + 1;
}

std::shared_ptr<const LayerProfiles> tabulate_beta(int layer, const AnalyticStream& psi, const ScalarProfile& rho,
                                                   double g, double a, double b, const ManufactureOptions& opt,
                                                   bool* degenerate) {
  int sgn = 0;
  if (!strictly_monotone(psi, a, b, 4000, &sgn)) {
    std::ostringstream os;
    os << "psi" << layer << " is not strictly monotone on [" << a << ", " << b << "]";
    fail(ErrorCode::non_monotone, os.str());
  }
  double lo = a - opt.margin * (b - a), hi = b + opt.margin * (b - a);
  int dummy = 0;
  if (!strictly_monotone(psi, lo, hi, 4000, &dummy) || dummy != sgn) {
    lo = a;
    hi = b;
  }
  const int n = std::max(opt.knots, 8);
  std::vector<double> q(n), beta(n);
  for (int i = 0; i < n; ++i) {
    const double y = lo + (hi - lo) * i / (n - 1);
    q[i] = psi.value(y);
    beta[i] = g * y * rho.d1(-q[i]) - psi.d2(y);
  }
  if (sgn < 0) {
    std::reverse(q.begin(), q.end());
    std::reverse(beta.begin(), beta.end());
  }
  const auto [mn, mx] = std::minmax_element(beta.begin(), beta.end());
  *degenerate = (*mx - *mn) <= 1e-13 * std::max(1.0, std::abs(*mx));
  auto pr = std::make_shared<LayerProfiles>();
  pr->layer_id = layer;
  pr->rho = rho;
  // Linear extrapolation keeps the end slopes, so beta stays monotone a further margin beyond the table;
  // rho is only ever evaluated at s = -q.
  const double pad = opt.margin * (q.back() - q.front());
  pr->q_range = {q.front() - pad, q.back() + pad};
  pr->s_range = {-q.back() - pad, -q.front() + pad};
  pr->beta = ScalarProfile::tabulated(std::move(q), std::move(beta));
  return pr;
}

ChebProfile sample_cheb(const AnalyticStream& s, double a, double b, int degree) {
  const Eigen::VectorXd y = ChebProfile::nodes(a, b, degree);
  Eigen::VectorXd v(y.size());
  for (int i = 0; i < y.size(); ++i) v[i] = s.value(y[i]);
  return ChebProfile(a, b, std::move(v));
}

}  // namespace

Manufactured manufacture_from_streamfunction(const AnalyticStream& psi1, const AnalyticStream& psi2,
                                             const ScalarProfile& rho1, const ScalarProfile& rho2, double g,
                                             double d, double h_tilde, double h, const ManufactureOptions& opt) {
  require(g > 0 && d > 0, ErrorCode::config, "g and d must be positive");
  require(h_tilde > -d && h_tilde < h, ErrorCode::config, "need -d < h_tilde < h");
  require(psi1.value && psi1.d1 && psi1.d2 && psi2.value && psi2.d1 && psi2.d2, ErrorCode::config,
          "stream functions need value, first and second derivatives");
  require(std::abs(psi1.value(h_tilde)) <= 1e-12 && std::abs(psi2.value(h_tilde)) <= 1e-12, ErrorCode::config,
          "stream functions must vanish on the interface");
  Manufactured m;
  bool deg1 = false, deg2 = false;
  m.profiles1 = tabulate_beta(1, psi1, rho1, g, -d, h_tilde, opt, &deg1);
  m.profiles2 = tabulate_beta(2, psi2, rho2, g, h_tilde, h, opt, &deg2);
  m.degenerate = deg1 || deg2;
  if (m.degenerate) m.warnings.push_back("degenerate vorticity function: Bernoulli map is not invertible");

  LaminarFlow& f = m.flow;
  f.g = g;
  f.d = d;
  f.h_tilde = h_tilde;
  f.h = h;
  f.p1 = -psi1.value(-d);
  f.p2 = -psi2.value(h);
  f.profiles1 = m.profiles1;
  f.profiles2 = m.profiles2;
  f.psi1 = sample_cheb(psi1, -d, h_tilde, opt.degree);
  f.psi2 = sample_cheb(psi2, h_tilde, h, opt.degree);
  fill_bernoulli_constants(f);
  f.stagnation = false;
  return m;
}

// ---------------------------------------------------------------------------

namespace {

/// Mean written as v0 + mean(v - v0) so identical entries give back v0 exactly.
double stable_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x - v[0];
  return v[0] + s / static_cast<double>(v.size());
}

double energy_increment(const LayerProfiles& pr, double g, double d, double from, double to) {
  // integral of dE/dPsi = -beta(Psi) - g d rho'(-Psi)
  return -pr.beta.integral(from, to) + g * d * (pr.rho_at(-to) - pr.rho_at(-from));
}

}  // namespace

PhysicalFields recover_physical(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2) {
  if (!state.stagnation.ok) fail(ErrorCode::domain, "physical reconstruction needs a stagnation-free state");
  const PhysicalParams& P = state.params;
  const LayerGrid& g1 = state.grids.layer1;
  const LayerGrid& g2 = state.grids.layer2;
  const int nx = g1.nx();
  PhysicalFields out;
  Gradient gr[2];
  Field kin[2], grav[2];
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const LayerProfiles& pr = layer == 1 ? l1 : l2;
    const Field& psi = state.psi(layer);
    const int i = layer - 1;
    gr[i] = mapped_gradient(g, psi);
    out.u[i].resize(g.size());
    out.v[i].resize(g.size());
    kin[i].resize(g.size());
    grav[i].resize(g.size());
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const int n = g.index(j, k);
        const double rho = pr.rho_at(-psi[n]);
        const double sr = std::sqrt(rho);
        out.u[i][n] = gr[i].y[n] / sr + P.c;
        out.v[i][n] = -gr[i].x[n] / sr;
        kin[i][n] = 0.5 * (gr[i].x[n] * gr[i].x[n] + gr[i].y[n] * gr[i].y[n]);
        grav[i][n] = P.g * rho * (g.y(j, k) + P.d);
      }
  }
  // Layer 2: E anchored by P2 = P_atm on S.
  const int top = g2.ns() - 1;
  std::vector<double> bs(nx);
  for (int j = 0; j < nx; ++j) bs[j] = kin[1][g2.index(j, top)] + grav[1][g2.index(j, top)];
  const double bs_mean = stable_mean(bs);
  const double psi_s = -state.p2;
  const double E2s = P.P_atm + bs_mean;
  out.E[1].resize(g2.size());
  out.P[1].resize(g2.size());
  for (int n = 0; n < g2.size(); ++n) {
    out.E[1][n] = E2s + energy_increment(l2, P.g, P.d, psi_s, state.psi2[n]);
    out.P[1][n] = out.E[1][n] - kin[1][n] - grav[1][n];
  }
  for (int j = 0; j < nx; ++j) out.P[1][g2.index(j, top)] = P.P_atm + (bs_mean - bs[j]);

  // Layer 1: E anchored by pressure continuity on the interface.
  const int itop = g1.ns() - 1;
  std::vector<double> ei(nx);
  for (int j = 0; j < nx; ++j) {
    const double p2i = out.P[1][g2.index(j, 0)];
    ei[j] = p2i + kin[0][g1.index(j, itop)] + grav[0][g1.index(j, itop)];
  }
  const double E1i = stable_mean(ei);
  out.E[0].resize(g1.size());
  out.P[0].resize(g1.size());
  for (int n = 0; n < g1.size(); ++n) {
    out.E[0][n] = E1i + energy_increment(l1, P.g, P.d, 0.0, state.psi1[n]);
    out.P[0][n] = out.E[0][n] - kin[0][n] - grav[0][n];
  }
  return out;
}

PhysicalDiagnostics physical_diagnostics(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2,
                                         const PhysicalFields& f) {
  PhysicalDiagnostics d;
  const PhysicalParams& P = state.params;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const LayerProfiles& pr = layer == 1 ? l1 : l2;
    const int i = layer - 1;
    const Gradient gu = mapped_gradient(g, f.u[i]);
    const Gradient gv = mapped_gradient(g, f.v[i]);
    const Gradient gp = mapped_gradient(g, f.P[i]);
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const int n = g.index(j, k);
        d.divergence_max = std::max(d.divergence_max, std::abs(gu.x[n] + gv.y[n]));
        if (k < 2 || k > g.ns() - 3) continue;
        const double rho = pr.rho_at(-state.psi(layer)[n]);
        const double U = f.u[i][n] - P.c, V = f.v[i][n];
        const double mx = rho * (U * gu.x[n] + V * gu.y[n]) + gp.x[n];
        const double my = rho * (U * gv.x[n] + V * gv.y[n]) + gp.y[n] + rho * P.g;
        d.momentum_x_max = std::max(d.momentum_x_max, std::abs(mx));
        d.momentum_y_max = std::max(d.momentum_y_max, std::abs(my));
      }
  }
  const LayerGrid& g1 = state.grids.layer1;
  const LayerGrid& g2 = state.grids.layer2;
  for (int j = 0; j < g1.nx(); ++j) {
    const int s = g2.index(j, g2.ns() - 1);
    d.surface_pressure_err = std::max(d.surface_pressure_err, std::abs(f.P[1][s] - P.P_atm));
    d.interface_pressure_jump =
        std::max(d.interface_pressure_jump, std::abs(f.P[0][g1.index(j, g1.ns() - 1)] - f.P[1][g2.index(j, 0)]));
    const double slope = state.domain.eta.d1(g2.x(j));
    d.kinematic_surface_max = std::max(d.kinematic_surface_max, std::abs(f.v[1][s] - (f.u[1][s] - P.c) * slope));
  }
  return d;
}

}  // namespace stratwave
