#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "stratwave/serialize.hpp"

using namespace stratwave;
using fixtures::error_code_of;

TEST_SUITE("state") {

TEST_CASE("LAM-1 lift satisfies the Dirichlet data") {
  auto s = fixtures::lam1_state();
  CHECK(s.trace_error <= 1e-14);
  CHECK(s.stagnation.ok);
  CHECK(s.stagnation.min_abs_psi_y[1] == doctest::Approx(1.0).epsilon(1e-3));  // cosh(0) at the interface, up to O(dsigma^2)
}

TEST_CASE("a shifted surface trace is rejected") {
  auto s = fixtures::lam1_state(32, 17, 17);
  Field psi2 = s.psi2;
  const LayerGrid& g = s.grids.layer2;
  for (int j = 0; j < g.nx(); ++j) psi2[g.index(j, g.ns() - 1)] += 0.1;
  CHECK(error_code_of([&] { assemble_state(s.psi1, psi2, s.domain, s.grids, s.p1, s.p2, s.params); }) ==
        ErrorCode::trace);
}

TEST_CASE("zero fields with p1 = p2 = 0 form a valid stagnant state") {
  auto d = build_domain(1.0, SurfaceCurve::flat(0.0), SurfaceCurve::flat(0.5));
  auto g = build_grids(d, 16, 9, 9);
  auto s = assemble_state(Field::Zero(16 * 9), Field::Zero(16 * 9), d, g, 0.0, 0.0, {});
  CHECK(s.trace_error == 0.0);
  CHECK_FALSE(s.stagnation.ok);
}

TEST_CASE("stagnation locates the nodes with the minority sign") {
  auto s = fixtures::lam1_state(16, 9, 9);
  Field psi1 = s.psi1;
  const LayerGrid& g = s.grids.layer1;
  // Reverse the vertical profile in the interior of one column.
  for (int k = 1; k < g.ns() - 1; ++k) psi1[g.index(3, k)] = -psi1[g.index(3, k)];
  auto rep = check_no_stagnation(s.grids, psi1, s.psi2);
  CHECK_FALSE(rep.ok);
  CHECK(rep.sign[0] == 0);
  REQUIRE_FALSE(rep.offending_nodes[0].empty());
  CHECK(rep.offending_nodes[0].front().first == 3);
}

TEST_CASE("random admissible perturbations satisfy both constraints and are grid independent") {
  auto s = fixtures::lam1_state(32, 17, 17);
  auto fine = fixtures::lam1_state(64, 33, 33);
  RandomOptions o;
  o.include_surfaces = true;
  auto p = random_admissible(5, s, o);
  auto [c1, c2] = constraint_integrals(s, p);
  CHECK(std::abs(c1) <= 1e-12);
  CHECK(std::abs(c2) <= 1e-12);
  auto q = random_admissible(5, s, o);
  CHECK((p.psi1p - q.psi1p).cwiseAbs().maxCoeff() == 0.0);
  // Unprojected draws are the same continuous field; compare coincident nodes.
  o.include_surfaces = false;
  auto pc = random_admissible(9, s, o), pf = random_admissible(9, fine, o);
  double diff = 0.0;
  for (int j = 0; j < 32; ++j)
    for (int k = 0; k < 17; ++k)
      diff = std::max(diff, std::abs(pc.psi2p[s.grids.layer2.index(j, k)] -
                                     pf.psi2p[fine.grids.layer2.index(2 * j, 2 * k)]));
  // The flux projection is grid dependent only through quadrature.
  CHECK(diff <= 1e-2);
  CHECK(random_admissible(10, s, o).psi2p != pc.psi2p);
}

TEST_CASE("projection removes both constraint integrals") {
  auto s = fixtures::lam1_state(32, 17, 17);
  Perturbation p = Perturbation::zero(s);
  p.psi1p = s.grids.layer1.sample([](double x, double y) { return 1 + y + 0.2 * std::cos(x); });
  p.psi2p = s.grids.layer2.sample([](double x, double y) { return y * y + std::sin(x); });
  for (auto kind : {ProjectionKind::flux, ProjectionKind::trace_preserving}) {
    auto q = project_admissible(p, s, kind);
    auto [c1, c2] = constraint_integrals(s, q);
    CHECK(std::abs(c1) <= 1e-12);
    CHECK(std::abs(c2) <= 1e-12);
  }
}

TEST_CASE("perturbation norm") {
  auto s = fixtures::lam1_state();
  Perturbation z = Perturbation::zero(s);
  CHECK(perturbation_norm(s, z) == 0.0);
  // Psi2p = sin x in layer 2: |grad|^2 + psi^2 = 1 over an area pi.
  z.psi2p = s.grids.layer2.sample([](double x, double) { return std::sin(x); });
  CHECK(perturbation_norm(s, z) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
  CHECK(perturbation_norm(s, z.scaled(2.0)) == doctest::Approx(2 * std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("state JSON round trip is bit exact") {
  auto s = fixtures::corrupted(fixtures::lam1_state(32, 17, 17));
  Json j = Json::parse(dump_json(state_to_json(s)));
  auto r = state_from_json(j);
  CHECK(r.psi1 == s.psi1);
  CHECK(r.psi2 == s.psi2);
  CHECK(r.p1 == s.p1);
  CHECK(r.p2 == s.p2);
  CHECK(r.params.Q2 == s.params.Q2);
  CHECK(state_fingerprint(r) == state_fingerprint(s));
  CHECK(state_fingerprint(r) != state_fingerprint(fixtures::lam1_state(32, 17, 17)));
}

TEST_CASE("unit_symmetric maps the full 64-bit range onto [-1, 1]") {
  CHECK(unit_symmetric(0) == -1.0);
  CHECK(unit_symmetric(~0ULL) <= 1.0);
  CHECK(unit_symmetric(~0ULL) > 0.999999);
}

}  // TEST_SUITE
