#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace stratwave;
using fixtures::error_code_of;

namespace {

/// Zero-trace interior direction: Psi2p = sin x * sigma(1 - sigma), projected trace-preservingly.
Perturbation bump(const FlowState& s) {
  Perturbation p = Perturbation::zero(s);
  const LayerGrid& g = s.grids.layer2;
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) p.psi2p[g.index(j, k)] = std::sin(g.x(j)) * g.sigma(k) * (1 - g.sigma(k));
  return project_admissible(p, s, ProjectionKind::trace_preserving);
}

HessianMatrix diag(std::initializer_list<double> d) {
  HessianMatrix m;
  m.entries = Eigen::VectorXd::Map(std::data(d), static_cast<Eigen::Index>(d.size())).asDiagonal();
  return m;
}

}  // namespace

TEST_SUITE("hessian") {

TEST_CASE("second variation is symmetric and quadratic") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  auto p3 = fixtures::unit_random(3, b.state), p4 = fixtures::unit_random(4, b.state);
  double ab = second_variation(b.state, b.maps, b.refs, p3, p4);
  double ba = second_variation(b.state, b.maps, b.refs, p4, p3);
  CHECK(std::abs(ab - ba) <= 1e-10 * std::abs(ab));
  CHECK(quadratic_form(b.state, b.maps, b.refs, Perturbation::zero(b.state)) == 0.0);
  double q = quadratic_form(b.state, b.maps, b.refs, p3);
  for (double t : {2.0, 3.0})
    CHECK(quadratic_form(b.state, b.maps, b.refs, p3.scaled(t)) == doctest::Approx(t * t * q).epsilon(1e-12));
}

TEST_CASE("zero-trace LAM-1 directions: Q(p) = int |grad Psi_p|^2 + int |Lap Psi_p|^2") {
  auto b = fixtures::lam1_bundle();
  SecondVariation sv(b.state, b.maps, b.refs);
  CHECK((sv.d22F(2).array() + 1.0).abs().maxCoeff() <= 1e-9);
  Perturbation p = bump(b.state);
  double expected = 0.0;
  for (int layer : {1, 2}) {
    const LayerGrid& g = b.state.grid(layer);
    const Field& f = p.psi(layer);
    Field lap = energy_laplacian(g, f);
    expected += gradient_energy(g, f, f) + area_integral(g, lap.cwiseProduct(lap));
  }
  double q = sv(p, p);
  CHECK(q > 0);
  CHECK(q == doctest::Approx(expected).epsilon(1e-9));
  auto t = sv.literal_terms(p, p);
  for (double bt : t.boundary) CHECK(std::abs(bt) <= 1e-12 * q);
}

TEST_CASE("second variation matches four-corner differences at a critical point") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  for (std::uint64_t s = 1; s <= 3; ++s) {
    auto a = fixtures::unit_random(2 * s, b.state), c = fixtures::unit_random(2 * s + 1, b.state);
    double an = second_variation(b.state, b.maps, b.refs, a, c);
    double f1 = fd_second_variation(b.state, b.maps, b.refs, a, c, 1e-3);
    double f2 = fd_second_variation(b.state, b.maps, b.refs, a, c, 5e-4);
    CHECK(std::abs(an - f1) <= 1e-3 * std::abs(an));
    // The difference shrinks toward the analytic value as eps halves.
    CHECK(std::abs(an - f2) <= std::abs(an - f1) + 1e-9 * std::abs(an));
  }
  CHECK(std::abs(fd_second_variation(b.state, b.maps, b.refs, Perturbation::zero(b.state),
                                     fixtures::unit_random(1, b.state), 1e-3)) <= 1e-6);
}

TEST_CASE("interface normal reading: only the n1 reading matches finite differences") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  auto a = fixtures::unit_random(1, b.state), c = fixtures::unit_random(2, b.state);
  double n1 = second_variation(b.state, b.maps, b.refs, a, c, InterfaceNormalReading::n1);
  double om = second_variation(b.state, b.maps, b.refs, a, c, InterfaceNormalReading::omega2_outward);
  double fd = fd_second_variation(b.state, b.maps, b.refs, a, c, 1e-3);
  CHECK(std::abs(n1 - fd) <= 1e-6 * std::abs(fd));
  CHECK(std::abs(om - fd) > 1e-2 * std::abs(fd));
  // Directions with zero interface traces cannot tell the readings apart.
  RandomOptions zt;
  zt.zero_traces = true;
  auto za = fixtures::unit_random(1, b.state, zt), zc = fixtures::unit_random(2, b.state, zt);
  CHECK(second_variation(b.state, b.maps, b.refs, za, zc, InterfaceNormalReading::n1) ==
        doctest::Approx(second_variation(b.state, b.maps, b.refs, za, zc, InterfaceNormalReading::omega2_outward))
            .epsilon(1e-12));
}

TEST_CASE("spectrum edge of diagonal matrices") {
  auto e = spectrum_edge(diag({1, 2, 3}));
  CHECK(e.lambda_min == doctest::Approx(1.0));
  CHECK(std::abs(e.vector[0]) == doctest::Approx(1.0));
  auto f = spectrum_edge(diag({-1, 5}));
  CHECK(f.lambda_min == doctest::Approx(-1.0));
  CHECK(std::abs(f.vector[0]) == doctest::Approx(1.0));
  CHECK(f.matrix_norm == doctest::Approx(5.0));
  CHECK(f.residual <= 1e-12);
}

TEST_CASE("Hessian assembly: one element and permutation") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  auto p = fixtures::unit_random(1, b.state), q = fixtures::unit_random(2, b.state),
       r = fixtures::unit_random(3, b.state);
  auto one = assemble_hessian(b.state, b.maps, b.refs, {p});
  CHECK(one.entries(0, 0) == doctest::Approx(quadratic_form(b.state, b.maps, b.refs, p)).epsilon(1e-13));
  auto m = assemble_hessian(b.state, b.maps, b.refs, {p, q, r});
  auto mp = assemble_hessian(b.state, b.maps, b.refs, {r, p, q}, {}, InterfaceNormalReading::n1, 2);
  int perm[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(mp.entries(i, j) == doctest::Approx(m.entries(perm[i], perm[j])).epsilon(1e-13));
  CHECK(error_code_of([&] { assemble_hessian(b.state, b.maps, b.refs, {p, p}); }) == ErrorCode::solver);
}

TEST_CASE("stability basis sizes and labels") {
  auto s = fixtures::lam1_state(32, 17, 17);
  std::vector<std::string> labels;
  auto basis = stability_basis(s, {}, &labels);
  CHECK(basis.size() == 40);
  CHECK(labels.size() == 40);
  BasisOptions o;
  o.restrict_surfaces = false;
  auto full = stability_basis(s, o, &labels);
  CHECK(full.size() == 48);
  CHECK(labels.back().rfind("eta", 0) == 0);
  for (const auto& p : basis) {
    auto [c1, c2] = constraint_integrals(s, p);
    CHECK(std::abs(c1) <= 1e-12);
    CHECK(std::abs(c2) <= 1e-12);
  }
}

TEST_CASE("stability verdicts on LAM-1") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  auto v = stability_verdict(b.state, b.maps, b.refs, {});
  CHECK(v.verdict == Verdict::stable);
  CHECK(v.lambda_min > 0);
  CHECK(v.d22F_negative);
  CHECK(v.surfaces_unperturbed);
  CHECK_FALSE(v.witness.has_value());

  auto c = fixtures::bundle(fixtures::corrupted(b.state));
  CHECK(stability_verdict(c.state, c.maps, c.refs, {}).verdict == Verdict::inconclusive);

  StabilityOptions bad;
  bad.tol_psd = 0;
  CHECK(error_code_of([&] { stability_verdict(b.state, b.maps, b.refs, bad); }) == ErrorCode::config);
}

}  // TEST_SUITE
