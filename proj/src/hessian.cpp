#include "stratwave/hessian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "parallel.hpp"

namespace stratwave {

using std::numbers::pi;

const char* to_string(InterfaceNormalReading r) noexcept {
  return r == InterfaceNormalReading::n1 ? "n1" : "omega2_outward";
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::stable: return "STABLE";
    case Verdict::indefinite: return "INDEFINITE";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

const std::array<const char*, 12>& second_variation_term_labels() {
  static const std::array<const char*, 12> labels = {
      "Sbar_psi2p_dn1",       "S_psi2y_dpsibar2p_eta",  "S_psi2y_etabar_dpsi2p",  "St_psibar2p_etabar_dpsi2p",
      "St_psi1y_etabar_dpsi1p", "St_psi1y_dpsibar1p_eta", "St_psi2y_dpsibar2p_eta", "S_gravity_kinetic_eta2",
      "S_d2F2_omegabar_eta",  "S_d1F2_eta2",            "St_d2F_omegabar_eta",    "St_jump_eta2",
  };
  return labels;
}

// ---------------------------------------------------------------------------

struct SecondVariation::Prepared {
  Field psi[2];
  Field lap[2];        // energy Laplacian of Psi_ip
  LineField omS2;      // extrapolated Laplacian traces
  LineField omI1, omI2;
  LineField tr2I;      // Psi_2p on the interface
  LineField dn2S, dn2I, dn1I;
  LineField e, et;     // eta_p, eta_tilde_p at the nodes
};

struct SecondVariation::Impl {
  const FlowState* state;
  InterfaceNormalReading reading;
  Field d22[2];
  LineField psi2yS, psi2yI, psi1yI;
  LineField coefS_grav_kin;  // g rho_surf + [|grad Psi_2|^2 / 2]_y
  LineField coefS_F;         // d1F2 + d2F2 * omega_2y on S
  LineField d2F2S;
  LineField d2F1I, d2F2I;
  LineField coefI;           // interface jump coefficient
};

namespace {

LineField row_of(const LayerGrid& g, const Field& f, int k) {
  LineField out(g.nx());
  for (int j = 0; j < g.nx(); ++j) out[j] = f[g.index(j, k)];
  return out;
}

}  // namespace

SecondVariation::SecondVariation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                                 InterfaceNormalReading reading)
    : impl_(std::make_unique<Impl>()) {
  Impl& I = *impl_;
  I.state = &state;
  I.reading = reading;
  const PhysicalParams& P = state.params;
  const LayerGrid& g1 = state.grids.layer1;
  const LayerGrid& g2 = state.grids.layer2;
  const int n1 = g1.ns() - 1, n2 = g2.ns() - 1, nx = g1.nx();

  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    const Field m = energy_laplacian(g, state.psi(layer));
    Field d(g.size());
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) d[g.index(j, k)] = maps[layer].d22F(g.y(j, k), m[g.index(j, k)]);
    I.d22[layer - 1] = std::move(d);
  }

  const Gradient gr1 = mapped_gradient(g1, state.psi1);
  const Gradient gr2 = mapped_gradient(g2, state.psi2);
  const Field om1 = mapped_laplacian(g1, state.psi1);
  const Field om2 = mapped_laplacian(g2, state.psi2);
  const Gradient gom1 = mapped_gradient(g1, om1);
  const Gradient gom2 = mapped_gradient(g2, om2);
  Field kin2(g2.size());
  for (int i = 0; i < g2.size(); ++i) kin2[i] = 0.5 * (gr2.x[i] * gr2.x[i] + gr2.y[i] * gr2.y[i]);
  const Gradient gkin2 = mapped_gradient(g2, kin2);

  I.psi2yS = row_of(g2, gr2.y, n2);
  I.psi2yI = row_of(g2, gr2.y, 0);
  I.psi1yI = row_of(g1, gr1.y, n1);
  I.coefS_grav_kin.resize(nx);
  I.coefS_F.resize(nx);
  I.d2F2S.resize(nx);
  I.d2F1I.resize(nx);
  I.d2F2I.resize(nx);
  I.coefI.resize(nx);
  const double jump = P.g * (maps[1].profiles().rho_at(0.0) - maps[2].profiles().rho_at(0.0));
  for (int j = 0; j < nx; ++j) {
    const int s = g2.index(j, n2);
    const double ys = g2.y(j, n2);
    const auto eS = maps[2].evaluate(ys, om2[s]);
    I.coefS_grav_kin[j] = P.g * refs.rho2 + gkin2.y[s];
    I.coefS_F[j] = eS.d1F + eS.d2F * gom2.y[s];
    I.d2F2S[j] = eS.d2F;

    const int a = g1.index(j, n1), b = g2.index(j, 0);
    const double yi = g1.y(j, n1);
    const auto e1 = maps[1].evaluate(yi, om1[a]);
    const auto e2 = maps[2].evaluate(yi, om2[b]);
    I.d2F1I[j] = e1.d2F;
    I.d2F2I[j] = e2.d2F;
    I.coefI[j] = jump - e1.d1F - e1.d2F * gom1.y[a] + e2.d1F + e2.d2F * gom2.y[b];
  }
}

SecondVariation::~SecondVariation() = default;
SecondVariation::SecondVariation(SecondVariation&&) noexcept = default;

const Field& SecondVariation::d22F(int layer) const { return impl_->d22[layer == 1 ? 0 : 1]; }

std::shared_ptr<const SecondVariation::Prepared> SecondVariation::prepare(const Perturbation& p) const {
  const FlowState& st = *impl_->state;
  const LayerGrid& g1 = st.grids.layer1;
  const LayerGrid& g2 = st.grids.layer2;
  require(p.psi1p.size() == g1.size() && p.psi2p.size() == g2.size(), ErrorCode::size,
          "perturbation does not match the state grids");
  auto out = std::make_shared<Prepared>();
  out->psi[0] = p.psi1p;
  out->psi[1] = p.psi2p;
  out->lap[0] = energy_laplacian(g1, p.psi1p);
  out->lap[1] = energy_laplacian(g2, p.psi2p);
  const Field om1 = mapped_laplacian(g1, p.psi1p);
  const Field om2 = mapped_laplacian(g2, p.psi2p);
  out->omS2 = row_of(g2, om2, g2.ns() - 1);
  out->omI2 = row_of(g2, om2, 0);
  out->omI1 = row_of(g1, om1, g1.ns() - 1);
  out->tr2I = boundary_trace(g2, p.psi2p, Boundary::interface);
  out->dn2S = boundary_normal_derivative(g2, p.psi2p, Boundary::surface);
  out->dn2I = boundary_normal_derivative(g2, p.psi2p, Boundary::interface);
  out->dn1I = boundary_normal_derivative(g1, p.psi1p, Boundary::interface);
  const int nx = g1.nx();
  out->e.resize(nx);
  out->et.resize(nx);
  for (int j = 0; j < nx; ++j) {
    out->e[j] = p.eta_p.value(g1.x(j));
    out->et[j] = p.eta_tilde_p.value(g1.x(j));
  }
  return out;
}

double SecondVariation::literal(const Prepared& a, const Prepared& b, SecondVariationTerms* terms) const {
  const Impl& I = *impl_;
  const FlowState& st = *I.state;
  const FlowDomain& dom = st.domain;
  SecondVariationTerms t;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = st.grid(layer);
    const int i = layer - 1;
    double s = 0.0;
    for (int j = 0; j < g.nx(); ++j)
      for (int k = 0; k < g.ns(); ++k) {
        const int n = g.index(j, k);
        s += g.area_weight(j, k) * I.d22[i][n] * a.lap[i][n] * b.lap[i][n];
      }
    t.interior[i] = gradient_energy(g, a.psi[i], b.psi[i]) - s;
  }
  const double wx = 2 * pi / st.nx();
  const auto dl = [&](const LineField& f, Boundary bd) { return line_integral(dom, f, bd, Measure::dl); };
  const auto dx = [&](const LineField& f) { return f.sum() * wx; };
  const double sgn = I.reading == InterfaceNormalReading::n1 ? 1.0 : -1.0;
  auto& B = t.boundary;
  B[0] = dl(a.tr2I.cwiseProduct(b.dn2I), Boundary::interface);
  B[1] = dl(I.psi2yS.cwiseProduct(a.dn2S).cwiseProduct(b.e), Boundary::surface);
  B[2] = dl(I.psi2yS.cwiseProduct(a.e).cwiseProduct(b.dn2S), Boundary::surface);
  B[3] = -sgn * dl((a.tr2I + I.psi2yI.cwiseProduct(a.et)).cwiseProduct(b.dn2I), Boundary::interface);
  B[4] = dl(I.psi1yI.cwiseProduct(a.et).cwiseProduct(b.dn1I), Boundary::interface);
  B[5] = dl(I.psi1yI.cwiseProduct(a.dn1I).cwiseProduct(b.et), Boundary::interface);
  B[6] = -dl(I.psi2yI.cwiseProduct(a.dn2I).cwiseProduct(b.et), Boundary::interface);
  B[7] = dx(I.coefS_grav_kin.cwiseProduct(b.e).cwiseProduct(a.e));
  B[8] = -dx(I.d2F2S.cwiseProduct(a.omS2).cwiseProduct(b.e));
  B[9] = -dx(I.coefS_F.cwiseProduct(b.e).cwiseProduct(a.e));
  B[10] = dx((-I.d2F1I.cwiseProduct(a.omI1) + I.d2F2I.cwiseProduct(a.omI2)).cwiseProduct(b.et));
  B[11] = dx(I.coefI.cwiseProduct(b.et).cwiseProduct(a.et));
  t.total = t.interior[0] + t.interior[1];
  for (double v : B) t.total += v;
  if (terms) *terms = t;
  return t.total;
}

SecondVariationTerms SecondVariation::literal_terms(const Perturbation& a, const Perturbation& b) const {
  SecondVariationTerms t;
  literal(*prepare(a), *prepare(b), &t);
  return t;
}

double SecondVariation::operator()(const Perturbation& a, const Perturbation& b) const {
  const auto pa = prepare(a);
  const auto pb = prepare(b);
  return 0.5 * (literal(*pa, *pb) + literal(*pb, *pa));
}

double second_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                        const Perturbation& a, const Perturbation& b, InterfaceNormalReading reading) {
  return SecondVariation(state, maps, refs, reading)(a, b);
}

double quadratic_form(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                      const Perturbation& p, InterfaceNormalReading reading) {
  return second_variation(state, maps, refs, p, p, reading);
}

double fd_second_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                           const Perturbation& a, const Perturbation& b, double eps) {
  require(eps > 0.0, ErrorCode::config, "eps must be positive");
  const Perturbation s = a + b, d = a - b;
  const double hpp = eval_H(perturbed_state(state, s, eps), maps, refs);
  const double hpm = eval_H(perturbed_state(state, d, eps), maps, refs);
  const double hmp = eval_H(perturbed_state(state, d, -eps), maps, refs);
  const double hmm = eval_H(perturbed_state(state, s, -eps), maps, refs);
  return ((hpp - hpm) - (hmp - hmm)) / (4 * eps * eps);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd gram_matrix(const FlowState& state, const std::vector<Perturbation>& basis) {
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = 0.0;
      for (int layer = 1; layer <= 2; ++layer) {
        const LayerGrid& g = state.grid(layer);
        const Field& a = basis[i].psi(layer);
        const Field& b = basis[j].psi(layer);
        v += gradient_energy(g, a, b) + area_integral(g, a.cwiseProduct(b));
      }
      v += curve_inner(basis[i].eta_p, basis[j].eta_p, state.nx());
      v += curve_inner(basis[i].eta_tilde_p, basis[j].eta_tilde_p, state.nx());
      G(i, j) = G(j, i) = v;
    }
  return G;
}

HessianMatrix assemble_hessian(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                               std::vector<Perturbation> basis, std::vector<std::string> labels,
                               InterfaceNormalReading reading, int threads) {
  const int n = static_cast<int>(basis.size());
  require(n >= 1, ErrorCode::config, "Hessian basis must not be empty");
  require(n <= kMaxDenseDimension, ErrorCode::solver, "Hessian basis exceeds the dense dimension cap");
  HessianMatrix H;
  H.nx = state.nx();
  H.ns1 = state.grids.layer1.ns();
  H.ns2 = state.grids.layer2.ns();
  H.state_hash = state_fingerprint(state);

  const Eigen::MatrixXd G = gram_matrix(state, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(G, Eigen::EigenvaluesOnly);
  const double gmin = ges.eigenvalues().minCoeff(), gmax = ges.eigenvalues().maxCoeff();
  H.gram_condition = gmin > 0 ? gmax / gmin : std::numeric_limits<double>::infinity();
  if (!(H.gram_condition <= 1e12)) {
    std::ostringstream os;
    os << "basis is numerically rank deficient (Gram condition " << H.gram_condition << ")";
    fail(ErrorCode::solver, os.str());
  }

  const SecondVariation sv(state, maps, refs, reading);
  std::vector<std::shared_ptr<const SecondVariation::Prepared>> prep(n);
  detail::parallel_for(n, threads, [&](int i) { prep[i] = sv.prepare(basis[i]); });
  Eigen::MatrixXd L(n, n);
  detail::parallel_for(n * n, threads, [&](int ij) {
    const int i = ij / n, j = ij % n;
    L(i, j) = sv.literal(*prep[i], *prep[j]);
  });
  H.entries = 0.5 * (L + L.transpose());
  const double scale = L.cwiseAbs().maxCoeff();
  H.asymmetry = scale > 0 ? (L - L.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  H.basis = std::move(basis);
  if (labels.size() != H.basis.size()) {
    labels.clear();
    for (int i = 0; i < n; ++i) labels.push_back("b" + std::to_string(i));
  }
  H.labels = std::move(labels);
  return H;
}

SpectrumEdge spectrum_edge(const HessianMatrix& matrix) {
  const Eigen::MatrixXd& M = matrix.entries;
  const int n = static_cast<int>(M.rows());
  require(n >= 1 && M.cols() == n, ErrorCode::size, "Hessian must be a non-empty square matrix");
  require(n <= kMaxDenseDimension, ErrorCode::solver, "eigensolver dimension cap exceeded");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  require(es.info() == Eigen::Success, ErrorCode::solver, "symmetric eigensolver did not converge");
  SpectrumEdge e;
  e.eigenvalues = es.eigenvalues();
  e.lambda_min = e.eigenvalues[0];
  e.vector = es.eigenvectors().col(0);
  // Fix the sign so the largest component is positive (deterministic witness).
  Eigen::Index imax = 0;
  e.vector.cwiseAbs().maxCoeff(&imax);
  if (e.vector[imax] < 0) e.vector = -e.vector;
  e.residual = (M * e.vector - e.lambda_min * e.vector).norm();
  e.matrix_norm = e.eigenvalues.cwiseAbs().maxCoeff();
  return e;
}

// ---------------------------------------------------------------------------

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

Field tensor_field(const LayerGrid& g, int m, bool sine, int k) {
  Field f(g.size());
  for (int j = 0; j < g.nx(); ++j) {
    const double fx = m == 0 ? 1.0 : (sine ? std::sin(m * g.x(j)) : std::cos(m * g.x(j)));
    for (int s = 0; s < g.ns(); ++s) f[g.index(j, s)] = fx * legendre(k, 2 * g.sigma(s) - 1);
  }
  return f;
}

SurfaceCurve mode_curve(int m, bool sine) {
  std::vector<double> c(m, 0.0), s(m, 0.0);
  (sine ? s : c)[m - 1] = 1.0;
  return SurfaceCurve(0.0, std::move(c), std::move(s));
}

}  // namespace

std::vector<Perturbation> stability_basis(const FlowState& state, const BasisOptions& opt,
                                          std::vector<std::string>* labels) {
  require(opt.fourier_modes >= 0 && opt.vertical_count >= 1, ErrorCode::config, "invalid basis dimensions");
  require(opt.basis_size >= 0, ErrorCode::config, "basis_size must be non-negative");
  std::vector<Perturbation> basis;
  std::vector<std::string> names;
  for (int layer = 1; layer <= 2; ++layer) {
    const LayerGrid& g = state.grid(layer);
    for (int m = 0; m <= opt.fourier_modes; ++m)
      for (int cs = 0; cs < (m == 0 ? 1 : 2); ++cs)
        for (int v = 1; v <= opt.vertical_count; ++v) {
          // m = 0 starts at P_2: P_1 minus its flux correction is a constant (a gauge direction).
          const int k = m == 0 ? v + 1 : v;
          Perturbation p = Perturbation::zero(state);
          (layer == 1 ? p.psi1p : p.psi2p) = tensor_field(g, m, cs == 1, k);
          basis.push_back(project_admissible(p, state));
          std::ostringstream os;
          os << "psi" << layer << ":" << (m == 0 ? "1" : (cs ? "sin" : "cos") + std::to_string(m)) << ":P" << k;
          names.push_back(os.str());
        }
  }
  if (!opt.restrict_surfaces) {
    for (int which = 0; which < 2; ++which)
      for (int m = 1; m <= opt.fourier_modes; ++m)
        for (int cs = 0; cs < 2; ++cs) {
          Perturbation p = Perturbation::zero(state);
          (which == 0 ? p.eta_p : p.eta_tilde_p) = mode_curve(m, cs == 1);
          basis.push_back(p);
          names.push_back(std::string(which == 0 ? "eta:" : "eta_tilde:") + (cs ? "sin" : "cos") +
                          std::to_string(m));
        }
  }
  if (opt.basis_size > 0) {
    require(opt.basis_size <= static_cast<int>(basis.size()), ErrorCode::config,
            "basis_size exceeds the number of available basis elements");
    basis.resize(opt.basis_size);
    names.resize(opt.basis_size);
  }
  if (labels) *labels = std::move(names);
  return basis;
}

StabilityVerdict stability_verdict(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                                   const StabilityOptions& opt, HessianMatrix* matrix_out) {
  require(opt.tol_psd > 0 && opt.tol_res > 0, ErrorCode::config, "tolerances must be positive");
  StabilityVerdict v;
  v.surfaces_unperturbed = opt.basis.restrict_surfaces;
  const ResidualReport res = pde_residual(state, maps[1].profiles(), maps[2].profiles());
  v.residual_max = res.max_norm();

  const SecondVariation sv(state, maps, refs, opt.reading);
  v.d22F_negative = (sv.d22F(1).array() < 0).all() && (sv.d22F(2).array() < 0).all();

  if (!(v.residual_max <= opt.tol_res)) {
    v.verdict = Verdict::inconclusive;
    std::ostringstream os;
    os << "state is not a solution: residual " << v.residual_max << " > tol_res " << opt.tol_res;
    v.reason = os.str();
    return v;
  }
  std::vector<std::string> labels;
  std::vector<Perturbation> basis = stability_basis(state, opt.basis, &labels);
  HessianMatrix H = assemble_hessian(state, maps, refs, std::move(basis), std::move(labels), opt.reading,
                                     opt.threads);
  const SpectrumEdge e = spectrum_edge(H);
  v.lambda_min = e.lambda_min;
  v.matrix_norm = e.matrix_norm;
  v.eigenvalues = e.eigenvalues;
  v.asymmetry = H.asymmetry;
  v.labels = H.labels;
  if (matrix_out) *matrix_out = H;
  if (v.lambda_min >= -opt.tol_psd * v.matrix_norm) {
    v.verdict = Verdict::stable;
    v.reason = "smallest Hessian eigenvalue is nonnegative within tolerance";
    return v;
  }
  Perturbation w = Perturbation::zero(state);
  for (int i = 0; i < e.vector.size(); ++i) w = w + H.basis[i].scaled(e.vector[i]);
  v.witness_coefficients = e.vector;
  v.witness_value = sv(w, w);
  v.witness = std::move(w);
  v.verdict = Verdict::indefinite;
  v.reason = "negative Hessian eigenvalue; witness direction attached";
  return v;
}

}  // namespace stratwave
