#include "stratwave/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace stratwave {

using std::numbers::pi;

StagnationReport check_no_stagnation(const LayerGrids& grids, const Field& psi1, const Field& psi2) {
  StagnationReport rep;
  rep.ok = true;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = grids[layer];
    const Field& psi = layer == 1 ? psi1 : psi2;
    const Gradient grad = mapped_gradient(g, psi);
    int npos = 0, nneg = 0;
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.size(); ++i) {
      const double v = grad.y[i];
      if (v > 0) ++npos;
      else if (v < 0) ++nneg;
      mn = std::min(mn, std::abs(v));
    }
    const int idx = layer - 1;
    rep.min_abs_psi_y[idx] = mn;
    if (npos == g.size()) rep.sign[idx] = 1;
    else if (nneg == g.size()) rep.sign[idx] = -1;
    else {
      rep.sign[idx] = 0;
      rep.ok = false;
      const bool minority_neg = nneg <= npos;
      for (int j = 0; j < g.nx() && rep.offending_nodes[idx].size() < 64; ++j)
        for (int k = 0; k < g.ns() && rep.offending_nodes[idx].size() < 64; ++k) {
          const double v = grad.y[g.index(j, k)];
          if ((minority_neg && v <= 0) || (!minority_neg && v >= 0)) rep.offending_nodes[idx].emplace_back(j, k);
        }
    }
  }
  return rep;
}

double dirichlet_trace_error(const LayerGrids& grids, const Field& psi1, const Field& psi2, double p1, double p2) {
  double err = 0.0;
  const LayerGrid& g1 = grids.layer1;
  const LayerGrid& g2 = grids.layer2;
  for (int j = 0; j < g1.nx(); ++j) {
    err = std::max(err, std::abs(psi1[g1.index(j, 0)] + p1));
    err = std::max(err, std::abs(psi1[g1.index(j, g1.ns() - 1)]));
    err = std::max(err, std::abs(psi2[g2.index(j, 0)]));
    err = std::max(err, std::abs(psi2[g2.index(j, g2.ns() - 1)] + p2));
  }
  return err;
}

FlowState assemble_state(Field psi1, Field psi2, FlowDomain domain, LayerGrids grids, double p1, double p2,
                         PhysicalParams params, double trace_tol) {
  require(params.g > 0.0, ErrorCode::config, "g must be positive");
  require(params.d > 0.0, ErrorCode::config, "d must be positive");
  require(grids.layer1.nx() == grids.layer2.nx(), ErrorCode::size, "layer grids must share nx");
  require(psi1.size() == grids.layer1.size() && psi2.size() == grids.layer2.size(), ErrorCode::size,
          "stream-function fields do not match the grids");
  const double err = dirichlet_trace_error(grids, psi1, psi2, p1, p2);
  if (!(err <= trace_tol)) {
    std::ostringstream os;
    os << "boundary trace violation " << err << " exceeds tolerance " << trace_tol;
    fail(ErrorCode::trace, os.str());
  }
  StagnationReport stag = check_no_stagnation(grids, psi1, psi2);
  return FlowState{std::move(domain), std::move(grids), std::move(psi1), std::move(psi2), p1, p2, params, err,
                   std::move(stag)};
}

// ---------------------------------------------------------------------------

Perturbation Perturbation::zero(const FlowState& state) {
  return Perturbation{Field::Zero(state.grids.layer1.size()), Field::Zero(state.grids.layer2.size()),
                      SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.0)};
}

Perturbation Perturbation::operator+(const Perturbation& o) const {
  return Perturbation{psi1p + o.psi1p, psi2p + o.psi2p, eta_p + o.eta_p, eta_tilde_p + o.eta_tilde_p};
}

Perturbation Perturbation::operator-(const Perturbation& o) const { return *this + o.scaled(-1.0); }

Perturbation Perturbation::scaled(double t) const {
  return Perturbation{psi1p * t, psi2p * t, eta_p.scaled(t), eta_tilde_p.scaled(t)};
}

std::pair<double, double> constraint_integrals(const FlowState& state, const Perturbation& pert) {
  const LineField b = boundary_normal_derivative(state.grids.layer1, pert.psi1p, Boundary::bottom);
  const LineField s = boundary_normal_derivative(state.grids.layer2, pert.psi2p, Boundary::surface);
  return {line_integral(state.domain, b, Boundary::bottom, Measure::dx),
          line_integral(state.domain, s, Boundary::surface, Measure::dl)};
}

namespace {

Field correction_field(const LayerGrid& g, ProjectionKind kind) {
  Field c(g.size());
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) {
      const double s = g.sigma(k), h = g.thickness(j);
      double v;
      if (kind == ProjectionKind::flux) v = g.layer_id() == 1 ? s * h : (1.0 - s) * h;
      else v = g.layer_id() == 1 ? h * s * (1 - s) * (1 - s) : h * s * s * (1 - s);
      c[g.index(j, k)] = v;
    }
  return c;
}

}  // namespace

Perturbation project_admissible(const Perturbation& pert, const FlowState& state, ProjectionKind kind) {
  Perturbation out = pert;
  Perturbation corr = Perturbation::zero(state);
  corr.psi1p = correction_field(state.grids.layer1, kind);
  corr.psi2p = correction_field(state.grids.layer2, kind);
  const auto [b0, s0] = constraint_integrals(state, pert);
  const auto [bc, sc] = constraint_integrals(state, corr);
  require(std::abs(bc) > 0 && std::abs(sc) > 0, ErrorCode::internal, "degenerate projection correction");
  out.psi1p -= (b0 / bc) * corr.psi1p;
  out.psi2p -= (s0 / sc) * corr.psi2p;
  return out;
}

double unit_symmetric(std::uint64_t bits) {
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

namespace {

double legendre(int n, double t) {
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = t;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * t * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

struct ModeCoeffs {
  // [m][cos/sin][degree]
  std::vector<double> c;
  int modes, degree;
  double at(int m, int cs, int n) const { return c[(m * 2 + cs) * (degree + 1) + n]; }
};

ModeCoeffs draw_field(std::mt19937_64& rng, int modes, int degree, double amplitude) {
  ModeCoeffs mc{std::vector<double>((modes + 1) * 2 * (degree + 1)), modes, degree};
  for (int m = 0; m <= modes; ++m)
    for (int cs = 0; cs < 2; ++cs)
      for (int n = 0; n <= degree; ++n) {
        const double r = unit_symmetric(rng());
        const double decay = 1.0 / ((1.0 + m) * (1.0 + n));
        mc.c[(m * 2 + cs) * (degree + 1) + n] = (m == 0 && cs == 1) ? 0.0 : amplitude * r * decay;
      }
  return mc;
}

Field sample_modes(const LayerGrid& g, const ModeCoeffs& mc, bool zero_traces) {
  Field f(g.size());
  for (int j = 0; j < g.nx(); ++j) {
    const double x = g.x(j);
    for (int k = 0; k < g.ns(); ++k) {
      const double s = g.sigma(k);
      double v = 0.0;
      for (int m = 0; m <= mc.modes; ++m) {
        const double cx = std::cos(m * x), sx = std::sin(m * x);
        for (int n = 0; n <= mc.degree; ++n) {
          const double pn = legendre(n, 2 * s - 1);
          v += (mc.at(m, 0, n) * cx + mc.at(m, 1, n) * sx) * pn;
        }
      }
      if (zero_traces) v *= s * (1 - s);
      f[g.index(j, k)] = v;
    }
  }
  return f;
}

SurfaceCurve draw_curve(std::mt19937_64& rng, int modes, double amplitude) {
  std::vector<double> a(modes), b(modes);
  for (int m = 0; m < modes; ++m) {
    a[m] = amplitude * unit_symmetric(rng()) / (1.0 + m);
    b[m] = amplitude * unit_symmetric(rng()) / (1.0 + m);
  }
  return SurfaceCurve(0.0, std::move(a), std::move(b));
}

}  // namespace

Perturbation random_admissible(std::uint64_t seed, const FlowState& state, const RandomOptions& opt) {
  require(opt.modes >= 1, ErrorCode::config, "random perturbation needs modes >= 1");
  require(opt.vertical_degree >= 0 && opt.vertical_degree <= 12, ErrorCode::config, "vertical degree out of range");
  std::mt19937_64 rng(seed);
  // Draw order is fixed so that every option combination consumes the same stream.
  const ModeCoeffs c1 = draw_field(rng, opt.modes, opt.vertical_degree, opt.amplitude);
  const ModeCoeffs c2 = draw_field(rng, opt.modes, opt.vertical_degree, opt.amplitude);
  const SurfaceCurve e = draw_curve(rng, opt.modes, opt.amplitude * 0.1);
  const SurfaceCurve et = draw_curve(rng, opt.modes, opt.amplitude * 0.1);

  Perturbation p = Perturbation::zero(state);
  if (opt.layer1) p.psi1p = sample_modes(state.grids.layer1, c1, opt.zero_traces);
  if (opt.layer2) p.psi2p = sample_modes(state.grids.layer2, c2, opt.zero_traces);
  if (opt.include_surfaces) {
    p.eta_p = e;
    p.eta_tilde_p = et;
  }
  if (opt.amplitude == 0.0) return p;
  return project_admissible(p, state, opt.zero_traces ? ProjectionKind::trace_preserving : ProjectionKind::flux);
}

double curve_inner(const SurfaceCurve& a, const SurfaceCurve& b, int nx) {
  double s = 0.0;
  const double w = 2 * pi / nx;
  for (int j = 0; j < nx; ++j) {
    const double x = -pi + j * w;
    s += a.value(x) * b.value(x);
  }
  return s * w;
}

double perturbation_norm(const FlowState& state, const Perturbation& pert) {
  double total = 0.0;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Field& f = pert.psi(layer);
    total += gradient_energy(g, f, f);
    total += area_integral(g, f.cwiseProduct(f));
  }
  total += curve_inner(pert.eta_p, pert.eta_p, state.nx());
  total += curve_inner(pert.eta_tilde_p, pert.eta_tilde_p, state.nx());
  return std::sqrt(std::max(total, 0.0));
}

std::string state_fingerprint(const FlowState& state) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_d = [&](double v) { mix(&v, sizeof v); };
  auto mix_i = [&](std::int64_t v) { mix(&v, sizeof v); };
  auto mix_curve = [&](const SurfaceCurve& c) {
    mix_d(c.mean());
    mix_i(static_cast<std::int64_t>(c.cos_coeffs().size()));
    for (double a : c.cos_coeffs()) mix_d(a);
    mix_i(static_cast<std::int64_t>(c.sin_coeffs().size()));
    for (double b : c.sin_coeffs()) mix_d(b);
  };
  mix_i(state.grids.layer1.nx());
  mix_i(state.grids.layer1.ns());
  mix_i(state.grids.layer2.ns());
  mix_d(state.domain.d);
  mix_curve(state.domain.eta_tilde);
  mix_curve(state.domain.eta);
  for (double v : {state.p1, state.p2, state.params.g, state.params.c, state.params.d, state.params.P_atm,
                   state.params.Q1, state.params.Q2})
    mix_d(v);
  mix(state.psi1.data(), sizeof(double) * state.psi1.size());
  mix(state.psi2.data(), sizeof(double) * state.psi2.size());
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace stratwave
