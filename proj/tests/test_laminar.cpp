#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace stratwave;
using fixtures::error_code_of;

namespace {

AnalyticStream poly(std::vector<double> c) {
  auto eval = [c](double y, int d) {
    double s = 0.0;
    for (int i = static_cast<int>(c.size()) - 1; i >= d; --i) {
      double f = 1.0;
      for (int q = 0; q < d; ++q) f *= (i - q);
      s = s * y + f * c[i];
    }
    return s;
  };
  return {[eval](double y) { return eval(y, 0); }, [eval](double y) { return eval(y, 1); },
          [eval](double y) { return eval(y, 2); }};
}

AnalyticStream minus_sinh() {
  return {[](double y) { return -std::sinh(y); }, [](double y) { return -std::cosh(y); },
          [](double y) { return -std::sinh(y); }};
}

}  // namespace

TEST_SUITE("laminar") {

TEST_CASE("Chebyshev interpolant is exact for cubics") {
  Eigen::VectorXd y = ChebProfile::nodes(-1.0, 0.5, 7);
  Eigen::VectorXd v = y.array().cube();
  ChebProfile p(-1.0, 0.5, v);
  CHECK(y[0] == doctest::Approx(-1.0));
  CHECK(y[7] == doctest::Approx(0.5));
  for (double t : {-0.8, -0.1, 0.3}) {
    CHECK(p.value(t) == doctest::Approx(t * t * t).epsilon(1e-13));
    CHECK(p.d1(t) == doctest::Approx(3 * t * t).epsilon(1e-11));
    CHECK(p.d2(t) == doctest::Approx(6 * t).epsilon(1e-9));
  }
}

TEST_CASE("LAM-1 laminar solve reproduces -sinh y and the Bernoulli constants") {
  auto f = fixtures::lam1_flow();
  double err = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double y1 = -1.0 + i / 200.0, y2 = 0.5 * i / 200.0;
    err = std::max({err, std::abs(f.psi1.value(y1) + std::sinh(y1)), std::abs(f.psi2.value(y2) + std::sinh(y2))});
  }
  CHECK(err <= 1e-9);
  CHECK(f.Q1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.Q2 == doctest::Approx(std::cosh(0.5) * std::cosh(0.5) / 2 + 1.5).epsilon(1e-9));
  CHECK_FALSE(f.stagnation);
}

TEST_CASE("p1 = p2 = 0 gives the stagnant rest state") {
  auto f = solve_laminar(fixtures::lam1_layer(1), fixtures::lam1_layer(2), 1.0, 1.0, 0.0, 0.5, 0.0, 0.0);
  CHECK(f.stagnation);
  CHECK_FALSE(f.warnings.empty());
  CHECK(std::abs(f.psi1.value(-0.5)) <= 1e-12);
}

TEST_CASE("lifted LAM-1 fields are x independent with exact traces") {
  auto s = fixtures::lam1_state(32, 17, 17);
  CHECK(s.trace_error == 0.0);
  auto g = mapped_gradient(s.grids.layer1, s.psi1);
  CHECK(g.x.cwiseAbs().maxCoeff() <= 1e-12);
  auto d = build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve(0.5, {0.1}, {}));
  CHECK(error_code_of([&] { lift_to_state(fixtures::lam1_flow(), build_grids(d, 16, 9, 9)); }) == ErrorCode::size);
}

TEST_CASE("manufacturing from -sinh y recovers beta(q) = -q") {
  auto m = manufacture_from_streamfunction(minus_sinh(), minus_sinh(), ScalarProfile::constant(2.0),
                                           ScalarProfile::constant(1.0), 1.0, 1.0, 0.0, 0.5);
  CHECK_FALSE(m.degenerate);
  for (const auto* p : {m.profiles1.get(), m.profiles2.get()}) {
    double err = 0.0;
    for (std::size_t i = 0; i < p->beta.knots().size(); ++i)
      err = std::max(err, std::abs(p->beta.values()[i] + p->beta.knots()[i]));
    CHECK(err <= 1e-8);
  }
  CHECK(m.flow.Q1 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("manufacturing edge cases") {
  auto rho = ScalarProfile::constant(1.0);
  auto lin = manufacture_from_streamfunction(poly({0, -1}), poly({0, -1}), rho, rho, 1.0, 1.0, 0.0, 0.5);
  CHECK(lin.degenerate);
  CHECK_FALSE(lin.warnings.empty());
  auto s = lift_to_state(lin.flow, 16, 9, 9);
  CHECK(pde_residual(s, *lin.profiles1, *lin.profiles2).interior_1.max <= 1e-10);
  CHECK(error_code_of([&] {
          manufacture_from_streamfunction(poly({0, 1, 2}), poly({0, -1}), rho, rho, 1.0, 1.0, 0.0, 0.5);
        }) == ErrorCode::non_monotone);
  CHECK(error_code_of([&] {
          manufacture_from_streamfunction(poly({0.1, -1}), poly({0, -1}), rho, rho, 1.0, 1.0, 0.0, 0.5);
        }) == ErrorCode::config);
}

TEST_CASE("cubic manufactured state closes the PDE to the tabulation floor") {
  auto m = manufacture_from_streamfunction(poly({0, -1, 0, -0.1}), poly({0, -1, 0, -0.1}),
                                           ScalarProfile::linear(2.0, -0.1), ScalarProfile::linear(1.0, -0.1), 1.0,
                                           1.0, 0.0, 0.5);
  CHECK(m.flow.p1 == doctest::Approx(-1.1).epsilon(1e-12));
  CHECK(m.flow.p2 == doctest::Approx(0.5125).epsilon(1e-12));
  auto s = lift_to_state(m.flow, 64, 33, 33);
  auto r = pde_residual(s, *m.profiles1, *m.profiles2);
  CHECK(std::max(r.interior_1.max, r.interior_2.max) <= 1e-6);
}

TEST_CASE("LAM-1 physical reconstruction") {
  auto s = fixtures::lam1_state(32, 17, 17);
  auto l1 = fixtures::lam1_layer(1), l2 = fixtures::lam1_layer(2);
  auto f = recover_physical(s, *l1, *l2);
  const LayerGrid& g = s.grids.layer2;
  double err = 0.0;
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) err = std::max(err, std::abs(f.u[1][g.index(j, k)] + std::cosh(g.y(j, k))));
  CHECK(err <= 1e-3);  // second-order sigma differences on 17 rows
  CHECK(f.v[1].cwiseAbs().maxCoeff() <= 1e-12);
  auto d = physical_diagnostics(s, *l1, *l2, f);
  CHECK(d.surface_pressure_err == 0.0);
  CHECK(d.interface_pressure_jump <= 1e-10);
  CHECK(d.divergence_max <= 1e-8);
}

}  // TEST_SUITE
