#pragma once

// LAM-1 laminar fixture: rho1 = 2, rho2 = 1, beta_i(q) = -q, g = d = 1, interface at 0,
// surface at 0.5, exact solution psi_i(y) = -sinh(y).

#include <cmath>
#include <memory>

#include "stratwave/hessian.hpp"
#include "stratwave/laminar.hpp"

namespace fixtures {

using namespace stratwave;

inline std::shared_ptr<const LayerProfiles> lam1_layer(int layer) {
  auto p = std::make_shared<LayerProfiles>();
  p->layer_id = layer;
  p->rho = ScalarProfile::constant(layer == 1 ? 2.0 : 1.0);
  p->beta = ScalarProfile::linear(0.0, -1.0);
  return p;
}

inline LaminarFlow lam1_flow() {
  return solve_laminar(lam1_layer(1), lam1_layer(2), 1.0, 1.0, 0.0, 0.5, -std::sinh(1.0), std::sinh(0.5));
}

inline FlowState lam1_state(int nx = 64, int ns1 = 33, int ns2 = 33) {
  return lift_to_state(lam1_flow(), nx, ns1, ns2);
}

struct Bundle {
  FlowState state;
  BernoulliMaps maps;
  GravityRefs refs;
};

inline Bundle bundle(FlowState s) {
  auto l1 = lam1_layer(1), l2 = lam1_layer(2);
  BernoulliMaps maps = maps_for_state(s, l1, l2);
  GravityRefs refs = default_gravity_refs(*l1, *l2, s.p1, s.p2);
  return {std::move(s), std::move(maps), refs};
}

inline Bundle lam1_bundle(int nx = 64, int ns1 = 33, int ns2 = 33) { return bundle(lam1_state(nx, ns1, ns2)); }

/// LAM-1 with amp * sin(x) * sigma(1 - sigma) added to Psi_2 (traces unchanged).
inline FlowState corrupted(const FlowState& s, double amp = 0.1) {
  Field psi2 = s.psi2;
  const LayerGrid& g = s.grids.layer2;
  for (int j = 0; j < g.nx(); ++j)
    for (int k = 0; k < g.ns(); ++k) psi2[g.index(j, k)] += amp * std::sin(g.x(j)) * g.sigma(k) * (1 - g.sigma(k));
  return assemble_state(s.psi1, psi2, s.domain, s.grids, s.p1, s.p2, s.params);
}

inline Perturbation unit_random(std::uint64_t seed, const FlowState& s, const RandomOptions& o = {}) {
  Perturbation p = random_admissible(seed, s, o);
  return p.scaled(1.0 / perturbation_norm(s, p));
}

template <class Fn>
ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace fixtures
