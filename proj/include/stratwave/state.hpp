#pragma once

// Discrete flow state (Psi_1, Psi_2, eta, eta_tilde) with its constants, and
// perturbations constrained by the two flux integrals of the admissible space.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratwave/geometry.hpp"

namespace stratwave {

struct PhysicalParams {
  double g = 1.0;
  double c = 0.0;
  double d = 1.0;
  double P_atm = 0.0;
  double Q1 = 0.0;
  double Q2 = 0.0;
};

struct StagnationReport {
  bool ok = false;
  double min_abs_psi_y[2] = {0.0, 0.0};
  int sign[2] = {0, 0};                                   // +1, -1, or 0 when mixed / zero
  std::vector<std::pair<int, int>> offending_nodes[2];    // (j, k) nodes with the minority sign (capped)
};

/// Psi_y single-signed on each layer grid.
StagnationReport check_no_stagnation(const LayerGrids& grids, const Field& psi1, const Field& psi2);

struct FlowState {
  FlowDomain domain;
  LayerGrids grids;
  Field psi1;
  Field psi2;
  double p1 = 0.0;
  double p2 = 0.0;
  PhysicalParams params;
  double trace_error = 0.0;  // max deviation from the Dirichlet data (B, S~ for both layers, S)
  StagnationReport stagnation;

  const Field& psi(int layer) const { return layer == 1 ? psi1 : psi2; }
  const LayerGrid& grid(int layer) const { return grids[layer]; }
  int nx() const { return grids.layer1.nx(); }
};

/// Max deviation of the traces from Psi_1 = -p1 on B, Psi_1 = Psi_2 = 0 on S~, Psi_2 = -p2 on S.
double dirichlet_trace_error(const LayerGrids& grids, const Field& psi1, const Field& psi2, double p1, double p2);

/// Validates sizes and boundary traces (ErrorCode::trace beyond trace_tol); records stagnation.
FlowState assemble_state(Field psi1, Field psi2, FlowDomain domain, LayerGrids grids, double p1, double p2,
                         PhysicalParams params, double trace_tol = 1e-9);

struct Perturbation {
  Field psi1p;
  Field psi2p;
  SurfaceCurve eta_p;
  SurfaceCurve eta_tilde_p;

  const Field& psi(int layer) const { return layer == 1 ? psi1p : psi2p; }
  bool moves_surfaces() const { return !eta_p.is_flat() || eta_p.mean() != 0.0 || !eta_tilde_p.is_flat() ||
                                       eta_tilde_p.mean() != 0.0; }

  static Perturbation zero(const FlowState& state);
  Perturbation operator+(const Perturbation& o) const;
  Perturbation operator-(const Perturbation& o) const;
  Perturbation scaled(double t) const;
};

/// The two admissibility integrals: (int_B Psi1p_y dx, int_S dPsi2p/dn2 dl).
std::pair<double, double> constraint_integrals(const FlowState& state, const Perturbation& pert);

enum class ProjectionKind {
  flux,              // corrections (y + d) in layer 1 and (eta - y) in layer 2
  trace_preserving,  // corrections vanishing on both boundaries of each layer
};

Perturbation project_admissible(const Perturbation& pert, const FlowState& state,
                                ProjectionKind kind = ProjectionKind::flux);

struct RandomOptions {
  int modes = 2;            // Fourier modes 0..modes in x
  int vertical_degree = 2;  // Legendre degree in sigma
  double amplitude = 1.0;
  bool include_surfaces = false;
  bool zero_traces = false;  // multiply by sigma(1 - sigma); projected trace-preservingly
  bool layer1 = true;
  bool layer2 = true;
};

/// Deterministic per seed: the same seed yields the same continuous fields on any grid.
Perturbation random_admissible(std::uint64_t seed, const FlowState& state, const RandomOptions& options = {});

/// sqrt(sum_i [grad_energy(Psi_ip) + int Psi_ip^2] + int eta_p^2 dx + int eta_tilde_p^2 dx).
double perturbation_norm(const FlowState& state, const Perturbation& pert);

/// Periodic L2 inner product of two curves on nx nodes.
double curve_inner(const SurfaceCurve& a, const SurfaceCurve& b, int nx);

/// 64-bit FNV-1a digest (hex) of the fields, constants, surfaces and grid sizes.
std::string state_fingerprint(const FlowState& state);

/// Uniform double in [-1, 1] from a 64-bit draw (portable across standard libraries).
double unit_symmetric(std::uint64_t bits);

}  // namespace stratwave
