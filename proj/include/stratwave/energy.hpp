#pragma once

// The energy functional H, its four-part first variation, the residual of the
// governing system and the criticality audit.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stratwave/profiles.hpp"
#include "stratwave/state.hpp"

namespace stratwave {

/// Constant densities multiplying g*(y + d) in the two area integrals of H.
struct GravityRefs {
  double rho1 = 1.0;
  double rho2 = 1.0;
};

/// (rho1(p1), rho2(p2)).
GravityRefs default_gravity_refs(const LayerProfiles& l1, const LayerProfiles& l2, double p1, double p2);
/// (rho1(0) - rho2(0) + rho2(p2), rho2(p2)): the choice whose interface jump matches the interface condition.
GravityRefs consistent_gravity_refs(const LayerProfiles& l1, const LayerProfiles& l2, double p2);

/// Bernoulli maps on windows covering the state: y over [-d, max eta] and p over the
/// image of -Psi, both widened by `margin` times their width.
BernoulliMaps maps_for_state(const FlowState& state, std::shared_ptr<const LayerProfiles> l1,
                             std::shared_ptr<const LayerProfiles> l2, double margin = 0.5);

struct EnergyTerms {
  double dirichlet[2] = {0, 0};  // 1/2 int |grad Psi|^2
  double gravity[2] = {0, 0};    // int g rho_ref (y + d)
  double constant[2] = {0, 0};   // -int (Q1 + Q2) and -int Q2
  double bernoulli[2] = {0, 0};  // -int F(y, Lap Psi)
  double total = 0.0;
};

EnergyTerms eval_H_terms(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs);
double eval_H(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs);

/// Fields and surfaces shifted by eps * pert; grids rebuilt on the moved domain with
/// nodal values kept at fixed (x, sigma). Throws ErrorCode::collapse.
FlowState perturbed_state(const FlowState& state, const Perturbation& pert, double eps);

struct NormPair {
  double l2 = 0.0;   // quadrature-weighted root mean square
  double max = 0.0;
};

struct ResidualReport {
  Field interior_res_1;
  Field interior_res_2;
  NormPair interior_1, interior_2;
  LineField surface_bernoulli_res;
  LineField interface_bernoulli_res;
  NormPair surface_bernoulli, interface_bernoulli;
  double dirichlet_bottom = 0.0;
  double dirichlet_interface = 0.0;
  double dirichlet_surface = 0.0;

  double max_norm() const;  // largest of every max-norm above
};

/// Interior residual is evaluated at every node (boundary rows use the extrapolated Laplacian).
ResidualReport pde_residual(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2);

struct VariationBreakdown {
  double dH1 = 0.0;
  double dH2 = 0.0;
  double dH3 = 0.0;
  double dH4 = 0.0;
  double total = 0.0;
};

struct VariationOptions {
  bool check_admissible = true;
  double constraint_tol = 1e-10;  // relative to perturbation_norm
};

VariationBreakdown first_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                                   const Perturbation& pert, const VariationOptions& options = {});

/// Perturbation seen at fixed physical points: Psi_p - Psi_y * dy(x, sigma) where dy is the
/// node displacement produced by eta_p, eta_tilde_p. Equal to pert when surfaces do not move.
Perturbation eulerian_perturbation(const FlowState& state, const Perturbation& pert);

double fd_first_variation(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                          const Perturbation& pert, double eps);

struct GradientCheckRow {
  std::uint64_t seed = 0;
  double eps = 0.0;
  double analytic = 0.0;  // first_variation of the Eulerian perturbation
  double fd = 0.0;
  double abs_err = 0.0;
  double order_est = 0.0;  // log2-type slope against the previous eps (NaN for the first)
};

std::vector<GradientCheckRow> gradient_check(const FlowState& state, const BernoulliMaps& maps,
                                             const GravityRefs& refs, const Perturbation& pert,
                                             const std::vector<double>& eps_list, std::uint64_t seed = 0);

struct AuditTrial {
  std::uint64_t seed = 0;
  double pert_norm = 0.0;
  VariationBreakdown variation;
  double normalized = 0.0;  // |total| / pert_norm
};

struct AuditOptions {
  int n_trials = 10;
  std::uint64_t seed = 1;
  double tol_grad = 1e-2;
  double tol_res = 1e-2;
  RandomOptions random;
  int threads = 1;
};

struct AuditReport {
  std::vector<AuditTrial> trials;
  double max_normalized = 0.0;
  ResidualReport residual;
  double residual_max = 0.0;
  bool critical = false;
  bool solution = false;
  bool critical_implies_solution = false;
  bool solution_implies_critical = false;
  double tol_grad = 0.0;
  double tol_res = 0.0;

  std::string verdict() const;  // "CRITICAL+SOLUTION", "CRITICAL", "SOLUTION" or "NEITHER"
};

/// Trials use seeds options.seed, options.seed + 1, ...; rejects n_trials < 1.
AuditReport audit_criticality(const FlowState& state, const BernoulliMaps& maps, const GravityRefs& refs,
                              const AuditOptions& options);

}  // namespace stratwave
