#pragma once

// x-independent (laminar) solutions, manufactured solutions, and reconstruction of
// velocity, pressure and Bernoulli energy from the stream functions.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stratwave/energy.hpp"

namespace stratwave {

/// Polynomial interpolant on Chebyshev-Lobatto nodes of [a, b].
class ChebProfile {
 public:
  ChebProfile() = default;
  /// values at nodes(a, b, n), ordered from y = a to y = b.
  ChebProfile(double a, double b, Eigen::VectorXd values);

  static Eigen::VectorXd nodes(double a, double b, int degree);
  /// First-derivative matrix on nodes(a, b, degree).
  static Eigen::MatrixXd diff_matrix(double a, double b, int degree);

  double a() const { return a_; }
  double b() const { return b_; }
  int degree() const { return static_cast<int>(values_.size()) - 1; }
  const Eigen::VectorXd& node_values() const { return values_; }
  const Eigen::VectorXd& node_y() const { return y_; }

  double value(double y) const { return interp(values_, y); }
  double d1(double y) const { return interp(d1_, y); }
  double d2(double y) const { return interp(d2_, y); }

 private:
  double a_ = 0.0, b_ = 1.0;
  Eigen::VectorXd y_, values_, d1_, d2_, weights_;
  double interp(const Eigen::VectorXd& f, double y) const;
};

struct LaminarFlow {
  ChebProfile psi1;  // on [-d, h_tilde]
  ChebProfile psi2;  // on [h_tilde, h]
  double g = 1.0, d = 1.0, h_tilde = 0.0, h = 0.5;
  double p1 = 0.0, p2 = 0.0, Q1 = 0.0, Q2 = 0.0;
  double ode_residual = 0.0;
  int newton_iterations = 0;
  bool stagnation = false;
  std::vector<std::string> warnings;
  std::shared_ptr<const LayerProfiles> profiles1, profiles2;
};

struct LaminarOptions {
  int degree = 32;
  double ode_tol = 1e-10;
  int max_iterations = 60;
};

/// Q2 = psi2'(h)^2/2 + g rho2(p2)(h + d), Q1 = (psi1'^2 - psi2'^2)/2 at h_tilde + g(rho1(0) - rho2(0))(h_tilde + d).
void fill_bernoulli_constants(LaminarFlow& flow);

/// psi'' = g y rho'(-psi) - beta(psi) per layer with the four Dirichlet values; damped Newton.
LaminarFlow solve_laminar(std::shared_ptr<const LayerProfiles> l1, std::shared_ptr<const LayerProfiles> l2, double g,
                          double d, double h_tilde, double h, double p1, double p2, const LaminarOptions& options = {});

/// Flat-surface state with psi_i(y) replicated across x. Throws ErrorCode::size when the grids'
/// domain is not the flow's flat domain.
FlowState lift_to_state(const LaminarFlow& flow, const LayerGrids& grids, double P_atm = 0.0, double c = 0.0);
FlowState lift_to_state(const LaminarFlow& flow, int nx, int ns1, int ns2, XDerivative xd = XDerivative::spectral);

struct AnalyticStream {
  std::function<double(double)> value, d1, d2;
};

struct ManufactureOptions {
  int knots = 2001;
  double margin = 0.25;  // fraction of the layer depth added on both sides of the beta table
  int degree = 32;
};

struct Manufactured {
  std::shared_ptr<const LayerProfiles> profiles1, profiles2;
  LaminarFlow flow;
  bool degenerate = false;  // beta constant: the Bernoulli map is not invertible
  std::vector<std::string> warnings;
};

/// beta_i(q) = g y_i(q) rho_i'(-q) - psi_i''(y_i(q)) tabulated over psi_i's image.
/// Throws ErrorCode::non_monotone when psi_i is not strictly monotone, ErrorCode::config
/// when psi_i(h_tilde) != 0.
Manufactured manufacture_from_streamfunction(const AnalyticStream& psi1, const AnalyticStream& psi2,
                                             const ScalarProfile& rho1, const ScalarProfile& rho2, double g,
                                             double d, double h_tilde, double h,
                                             const ManufactureOptions& options = {});

struct PhysicalFields {
  Field u[2], v[2];  // u is the absolute horizontal velocity (relative velocity + c)
  Field P[2], E[2];
};

PhysicalFields recover_physical(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2);

struct PhysicalDiagnostics {
  double divergence_max = 0.0;   // |u_x + v_y|
  double momentum_x_max = 0.0;   // rho (U u_x + v u_y) + P_x, rows at least two away from boundaries
  double momentum_y_max = 0.0;   // rho (U v_x + v v_y) + P_y + rho g
  double surface_pressure_err = 0.0;  // max |P2 - P_atm| on S
  double interface_pressure_jump = 0.0;  // max |P1 - P2| on S~
  double kinematic_surface_max = 0.0;  // max |v2 - (u2 - c) eta'| on S
};

PhysicalDiagnostics physical_diagnostics(const FlowState& state, const LayerProfiles& l1, const LayerProfiles& l2,
                                         const PhysicalFields& fields);

}  // namespace stratwave
