#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace stratwave;
using fixtures::error_code_of;

namespace {

/// H of LAM-1 by adaptive 1-D quadrature of the closed-form integrand times the period.
double lam1_energy_oracle(const FlowState& s, const GravityRefs& refs) {
  const double p2 = std::sinh(0.5), Q1 = s.params.Q1, Q2 = s.params.Q2;
  auto F = [p2](double m) { return 0.5 * (p2 * p2 - m * m); };
  auto layer = [&](double a, double b, double rho_ref, double q) {
    return integrate_adaptive(
        [&](double y) {
          double dpsi = -std::cosh(y), lap = -std::sinh(y);
          return 0.5 * dpsi * dpsi + rho_ref * (y + 1.0) - q - F(lap);
        },
        a, b, 1e-14);
  };
  return 2 * M_PI * (layer(-1.0, 0.0, refs.rho1, Q1 + Q2) + layer(0.0, 0.5, refs.rho2, Q2));
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("H of LAM-1 converges to the 1-D closed-form integral at second order") {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    auto b = fixtures::lam1_bundle(32, n + 1, n + 1);
    double exact = lam1_energy_oracle(b.state, b.refs);
    double err = std::abs(eval_H(b.state, b.maps, b.refs) - exact) / std::abs(exact);
    if (prev > 0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.1));
    prev = err;
  }
  CHECK(prev <= 2e-4);
}

TEST_CASE("H is reproducible and linear in Q2") {
  auto b = fixtures::lam1_bundle();
  double h = eval_H(b.state, b.maps, b.refs);
  CHECK(h == eval_H(b.state, b.maps, b.refs));
  FlowState s2 = b.state;
  s2.params.Q2 += 1.0;
  // Areas 2 pi and pi.
  CHECK(eval_H(s2, b.maps, b.refs) - h == doctest::Approx(-3 * M_PI).epsilon(1e-12));
  auto t = eval_H_terms(b.state, b.maps, b.refs);
  double sum = 0;
  for (int i = 0; i < 2; ++i) sum += t.dirichlet[i] + t.gravity[i] + t.constant[i] + t.bernoulli[i];
  CHECK(sum == doctest::Approx(t.total).epsilon(1e-14));
}

TEST_CASE("PDE residual of LAM-1 decays at second order") {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    auto s = fixtures::lam1_state(2 * n, n + 1, n + 1);
    double r = pde_residual(s, *fixtures::lam1_layer(1), *fixtures::lam1_layer(2)).max_norm();
    if (prev > 0) CHECK(std::log2(prev / r) == doctest::Approx(2.0).epsilon(0.1));
    prev = r;
  }
}

TEST_CASE("a Q2 shift moves only the surface Bernoulli residual, by a constant") {
  auto s = fixtures::lam1_state(32, 17, 17);
  auto l1 = fixtures::lam1_layer(1), l2 = fixtures::lam1_layer(2);
  auto r0 = pde_residual(s, *l1, *l2);
  s.params.Q2 += 0.1;
  auto r1 = pde_residual(s, *l1, *l2);
  CHECK(((r1.surface_bernoulli_res - r0.surface_bernoulli_res).array() + 0.1).abs().maxCoeff() <= 1e-12);
  CHECK((r1.interface_bernoulli_res - r0.interface_bernoulli_res).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((r1.interior_res_2 - r0.interior_res_2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("first variation: zero direction, admissibility and term sum") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  CHECK(first_variation(b.state, b.maps, b.refs, Perturbation::zero(b.state)).total == 0.0);
  Perturbation bad = Perturbation::zero(b.state);
  bad.psi1p = b.state.grids.layer1.sample([](double, double y) { return y + 1.0; });
  CHECK(error_code_of([&] { first_variation(b.state, b.maps, b.refs, bad); }) == ErrorCode::admissibility);
  RandomOptions o;
  o.include_surfaces = true;
  auto v = first_variation(b.state, b.maps, b.refs, random_admissible(3, b.state, o));
  CHECK(v.dH1 + v.dH2 + v.dH3 + v.dH4 == doctest::Approx(v.total).epsilon(1e-14));
}

TEST_CASE("first variation matches a central difference away from critical points") {
  auto b = fixtures::bundle(fixtures::corrupted(fixtures::lam1_state(32, 17, 17)));
  auto p = fixtures::unit_random(2, b.state);
  double a = first_variation(b.state, b.maps, b.refs, p).total;
  double fd = fd_first_variation(b.state, b.maps, b.refs, p, 1e-4);
  CHECK(std::abs(a) > 1e-2);
  CHECK(std::abs(a - fd) <= 1e-6 * std::abs(a));
}

TEST_CASE("gradient check rows and order estimate") {
  // LAM-1 has a quadratic H along every line; the cubic manufactured flow does not.
  auto cubic = AnalyticStream{[](double y) { return -y - 0.1 * y * y * y; },
                              [](double y) { return -1.0 - 0.3 * y * y; }, [](double y) { return -0.6 * y; }};
  auto m = manufacture_from_streamfunction(cubic, cubic, ScalarProfile::linear(2.0, -0.1),
                                           ScalarProfile::linear(1.0, -0.1), 1.0, 1.0, 0.0, 0.5);
  auto s = lift_to_state(m.flow, 32, 17, 17);
  fixtures::Bundle b{s, maps_for_state(s, m.profiles1, m.profiles2),
                     default_gravity_refs(*m.profiles1, *m.profiles2, s.p1, s.p2)};
  auto p = fixtures::unit_random(4, b.state);
  auto rows = gradient_check(b.state, b.maps, b.refs, p, {1e-2, 5e-3}, 4);
  REQUIRE(rows.size() == 2);
  CHECK(std::isnan(rows[0].order_est));
  CHECK(rows[1].order_est == doctest::Approx(2.0).epsilon(0.1));
  CHECK(rows[1].seed == 4);
  CHECK(error_code_of([&] { gradient_check(b.state, b.maps, b.refs, p, {}); }) == ErrorCode::config);
}

TEST_CASE("surface directions: Eulerian first variation converges to the moved-domain difference") {
  // The Eulerian field uses one-sided boundary derivatives, so the gap is first order in the grid.
  double prev = 0.0;
  for (int n : {16, 32}) {
    auto b = fixtures::bundle(fixtures::corrupted(fixtures::lam1_state(2 * n, n + 1, n + 1)));
    RandomOptions o;
    o.include_surfaces = true;
    auto p = fixtures::unit_random(6, b.state, o);
    // The Eulerian field need not satisfy the flux constraints of the moved problem.
    VariationOptions vo;
    vo.check_admissible = false;
    double a = first_variation(b.state, b.maps, b.refs, eulerian_perturbation(b.state, p), vo).total;
    double gap = std::abs(a - fd_first_variation(b.state, b.maps, b.refs, p, 1e-4));
    CHECK(gap <= 5e-3 * std::abs(a));
    if (prev > 0) CHECK(std::log2(prev / gap) == doctest::Approx(1.0).epsilon(0.1));
    prev = gap;
  }
}

TEST_CASE("criticality audit verdicts") {
  auto b = fixtures::lam1_bundle();
  AuditOptions o;
  auto rep = audit_criticality(b.state, b.maps, b.refs, o);
  CHECK(rep.verdict() == "CRITICAL+SOLUTION");
  CHECK(rep.trials.size() == 10);
  CHECK(rep.max_normalized <= 5 * rep.residual_max);

  auto c = fixtures::bundle(fixtures::corrupted(b.state));
  auto bad = audit_criticality(c.state, c.maps, c.refs, o);
  CHECK(bad.verdict() == "NEITHER");
  double ratio = bad.max_normalized / bad.residual_max;
  CHECK(ratio >= 0.1);
  CHECK(ratio <= 10.0);

  o.n_trials = 0;
  CHECK(error_code_of([&] { audit_criticality(b.state, b.maps, b.refs, o); }) == ErrorCode::config);
}

TEST_CASE("audit is independent of the thread count") {
  auto b = fixtures::lam1_bundle(32, 17, 17);
  AuditOptions o;
  o.n_trials = 6;
  auto r1 = audit_criticality(b.state, b.maps, b.refs, o);
  o.threads = 3;
  auto r3 = audit_criticality(b.state, b.maps, b.refs, o);
  for (std::size_t i = 0; i < r1.trials.size(); ++i) CHECK(r1.trials[i].normalized == r3.trials[i].normalized);
}

}  // TEST_SUITE
