#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace stratwave;
using fixtures::error_code_of;

namespace {

FlowDomain curved_domain() {
  return build_domain(1.0, SurfaceCurve(0.0, {0.05}, {}), SurfaceCurve(0.5, {0.1}, {0.02}));
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("flat LAM-1 domain has thicknesses 1 and 0.5") {
  auto d = build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.5));
  CHECK(d.min_thickness1 == doctest::Approx(1.0));
  CHECK(d.min_thickness2 == doctest::Approx(0.5));
}

TEST_CASE("crossing surfaces collapse the domain") {
  CHECK(error_code_of([] { build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve(0.5, {0.6}, {})); }) ==
        ErrorCode::collapse);
  CHECK(error_code_of([] { build_domain(-1.0, SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.5)); }) !=
        ErrorCode::ok);
}

TEST_CASE("surface curve derivatives") {
  SurfaceCurve c(0.5, {0.1, 0.0}, {0.0, 0.2});
  double x = 0.7;
  CHECK(c.value(x) == doctest::Approx(0.5 + 0.1 * std::cos(x) + 0.2 * std::sin(2 * x)));
  CHECK(c.d1(x) == doctest::Approx(-0.1 * std::sin(x) + 0.4 * std::cos(2 * x)));
  CHECK(c.d2(x) == doctest::Approx(-0.1 * std::cos(x) - 0.8 * std::sin(2 * x)));
}

TEST_CASE("periodic derivative matrices") {
  for (auto kind : {XDerivative::spectral, XDerivative::fourth_order}) {
    const int n = 64;
    Eigen::MatrixXd D = periodic_derivative_matrix(n, kind);
    CHECK((D + D.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::VectorXd f(n), df(n);
    for (int j = 0; j < n; ++j) {
      double x = -M_PI + 2 * M_PI * j / n;
      f[j] = std::sin(3 * x);
      df[j] = 3 * std::cos(3 * x);
    }
    double err = (D * f - df).cwiseAbs().maxCoeff();
    CHECK(err <= (kind == XDerivative::spectral ? 1e-11 : 1e-3));
  }
}

TEST_CASE("area quadrature: areas and first moments") {
  auto d = curved_domain();
  auto g = build_grids(d, 64, 17, 17);
  Field one = Field::Ones(g.layer1.size());
  // Mean thicknesses are 1 and 0.5 regardless of the cosine modes.
  CHECK(area_integral(g.layer1, one) == doctest::Approx(2 * M_PI).epsilon(1e-12));
  CHECK(area_integral(g.layer2, Field::Ones(g.layer2.size())) == doctest::Approx(M_PI).epsilon(1e-12));
  // int_{-1}^{0} y dy over a period on the flat domain.
  auto flat = build_grids(build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.5)), 16, 9, 9);
  Field y = flat.layer1.sample([](double, double yy) { return yy; });
  CHECK(area_integral(flat.layer1, y) == doctest::Approx(-M_PI).epsilon(1e-13));
}

TEST_CASE("mapped Laplacian is exact for quadratics on a flat grid") {
  auto g = build_grids(build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.5)), 16, 9, 9);
  Field f = g.layer2.sample([](double, double y) { return y * y; });
  CHECK((mapped_laplacian(g.layer2, f).array() - 2.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("mapped gradient converges on a curved grid") {
  auto d = curved_domain();
  auto fn = [](double x, double y) { return std::sin(x) * std::exp(y); };
  double prev = 0.0;
  for (int n : {16, 32}) {
    auto g = build_grids(d, 2 * n, n + 1, n + 1);
    auto grad = mapped_gradient(g.layer2, g.layer2.sample(fn));
    Field ex = g.layer2.sample([](double x, double y) { return std::cos(x) * std::exp(y); });
    Field ey = g.layer2.sample(fn);
    double err = std::max((grad.x - ex).cwiseAbs().maxCoeff(), (grad.y - ey).cwiseAbs().maxCoeff());
    if (prev > 0) CHECK(prev / err > 3.0);
    prev = err;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("energy Laplacian is the adjoint of the gradient energy") {
  // For v vanishing on both boundaries: a(u, v) = -int v L_E u, exactly.
  auto g = build_grids(curved_domain(), 32, 17, 17).layer2;
  Field u = g.sample([](double x, double y) { return std::cos(2 * x) * y * y + std::sin(x) * y; });
  Field v = g.sample([](double x, double) { return std::sin(x) + 0.3 * std::cos(3 * x); });
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) v[g.index(j, k)] *= g.sigma(k) * (1 - g.sigma(k));
  double lhs = gradient_energy(g, u, v);
  double rhs = -area_integral(g, (v.array() * energy_laplacian(g, u).array()).matrix());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("surface arc length against adaptive quadrature") {
  auto d = curved_domain();
  auto g = build_grids(d, 128, 9, 9);
  LineField one = LineField::Ones(128);
  double exact = integrate_adaptive([&](double x) { return std::hypot(1.0, d.eta.d1(x)); }, -M_PI, M_PI);
  CHECK(line_integral(d, one, Boundary::surface, Measure::dl) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(line_integral(d, one, Boundary::surface, Measure::dx) == doctest::Approx(2 * M_PI).epsilon(1e-14));
}

TEST_CASE("boundary operators") {
  auto d = curved_domain();
  auto g = build_grids(d, 32, 17, 17);
  Field f = g.layer1.sample([](double, double y) { return 3 * y; });
  CHECK(error_code_of([&] { boundary_normal_derivative(g.layer1, f, Boundary::surface); }) ==
        ErrorCode::wrong_boundary);
  LineField tr = boundary_trace(g.layer1, f, Boundary::bottom);
  CHECK((tr.array() + 3.0).abs().maxCoeff() <= 1e-14);
  auto [nx, ny] = unit_normal(SurfaceCurve::flat(0.5), 0.3);
  CHECK(nx == 0.0);
  CHECK(ny == doctest::Approx(1.0));
  // Flat bottom: the normal derivative of 3y is 3.
  LineField dn = boundary_normal_derivative(g.layer1, f, Boundary::bottom);
  CHECK((dn.array() - 3.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("grid size limits") {
  auto d = curved_domain();
  CHECK(error_code_of([&] { build_grids(d, 7, 17, 17); }) == ErrorCode::size);
  CHECK(error_code_of([&] { build_grids(d, 32, 3, 17); }) == ErrorCode::size);
}

}  // TEST_SUITE
