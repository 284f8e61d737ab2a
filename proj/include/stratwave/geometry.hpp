#pragma once

// Periodic two-layer domain, sigma-mapped layer grids and the discrete
// operators (gradient, Laplacian, boundary traces, quadrature) on them.
//
// Node (j, k) of a layer grid sits at x_j = -pi + 2*pi*j/nx and
// y = lower(x_j) + sigma_k * (upper(x_j) - lower(x_j)); fields are stored
// row-major with index j*ns + k.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "stratwave/errors.hpp"

namespace stratwave {

using Field = Eigen::VectorXd;      // nx*ns nodal values
using LineField = Eigen::VectorXd;  // nx values along a boundary

enum class Boundary { bottom, interface, surface };
enum class Measure { dx, dl };
enum class XDerivative { spectral, fourth_order };

const char* to_string(Boundary b) noexcept;

/// 2*pi-periodic curve mean + sum_k (a_k cos kx + b_k sin kx).
class SurfaceCurve {
 public:
  SurfaceCurve() = default;
  SurfaceCurve(double mean, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);
  static SurfaceCurve flat(double mean) { return SurfaceCurve(mean, {}, {}); }

  double mean() const { return mean_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  std::size_t modes() const { return std::max(cos_.size(), sin_.size()); }
  bool is_flat() const;

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  SurfaceCurve operator+(const SurfaceCurve& o) const;
  SurfaceCurve scaled(double t) const;

 private:
  double mean_ = 0.0;
  std::vector<double> cos_, sin_;
};

struct FlowDomain {
  double d = 1.0;
  SurfaceCurve eta_tilde;
  SurfaceCurve eta;
  double min_thickness1 = 0.0;  // min of eta_tilde + d
  double min_thickness2 = 0.0;  // min of eta - eta_tilde

  const SurfaceCurve& curve(Boundary b) const;
};

/// Validates d > 0 and positive layer thickness on a dense periodic scan.
FlowDomain build_domain(double d, SurfaceCurve eta_tilde, SurfaceCurve eta, int scan_points = 1024);

/// Periodic first-derivative matrix on nx uniform nodes (antisymmetric).
Eigen::MatrixXd periodic_derivative_matrix(int nx, XDerivative kind);

class LayerGrid {
 public:
  static constexpr int max_nx = 1024;
  static constexpr int max_ns = 513;

  LayerGrid(int layer_id, const FlowDomain& domain, int nx, int ns, XDerivative xd = XDerivative::spectral);

  int layer_id() const { return layer_id_; }
  int nx() const { return nx_; }
  int ns() const { return ns_; }
  int size() const { return nx_ * ns_; }
  int index(int j, int k) const { return j * ns_ + k; }
  double dx() const { return dx_; }
  double dsigma() const { return dsigma_; }
  XDerivative x_derivative() const { return xd_; }

  double x(int j) const { return x_[j]; }
  double sigma(int k) const { return k * dsigma_; }
  double y(int j, int k) const { return lower_[j] + sigma(k) * h_[j]; }
  double thickness(int j) const { return h_[j]; }
  double thickness_x(int j) const { return hx_[j]; }
  double lower(int j) const { return lower_[j]; }
  double lower_x(int j) const { return lower_x_[j]; }
  double upper_x(int j) const { return lower_x_[j] + hx_[j]; }
  /// d(sigma)/dx at fixed y, evaluated at an arbitrary sigma.
  double sigma_x(int j, double s) const { return -(lower_x_[j] + s * hx_[j]) / h_[j]; }
  double sigma_y(int j) const { return 1.0 / h_[j]; }

  /// Boundaries that belong to this layer: (lower, upper).
  Boundary lower_boundary() const { return layer_id_ == 1 ? Boundary::bottom : Boundary::interface; }
  Boundary upper_boundary() const { return layer_id_ == 1 ? Boundary::interface : Boundary::surface; }

  /// Trapezoid-in-sigma, periodic-trapezoid-in-x quadrature weight including the Jacobian.
  double area_weight(int j, int k) const;
  const Eigen::MatrixXd& dx_matrix() const { return *dmat_; }

  Field sample(const std::function<double(double, double)>& f) const;  // f(x, y)

 private:
  int layer_id_, nx_, ns_;
  double dx_, dsigma_;
  XDerivative xd_;
  std::vector<double> x_, lower_, lower_x_, h_, hx_;
  std::shared_ptr<const Eigen::MatrixXd> dmat_;
};

struct LayerGrids {
  LayerGrid layer1;
  LayerGrid layer2;
  const LayerGrid& operator[](int layer) const { return layer == 1 ? layer1 : layer2; }
};

/// Tensor grids for both layers. Requires nx >= 8 even and ns >= 5.
LayerGrids build_grids(const FlowDomain& domain, int nx, int ns1, int ns2,
                       XDerivative xd = XDerivative::spectral);

struct Gradient {
  Field x;
  Field y;
};

/// Nodal (psi_x, psi_y): x-derivatives via the periodic matrix, sigma-derivatives
/// second-order central with one-sided second-order closures.
Gradient mapped_gradient(const LayerGrid& grid, const Field& psi);

/// Nodal Laplacian: energy-consistent stencil at interior rows, quadratic
/// one-sided extrapolation on the two boundary rows.
Field mapped_laplacian(const LayerGrid& grid, const Field& psi);

/// Laplacian that is the exact discrete adjoint of gradient_energy:
///   sum W u L(v) = -gradient_energy(u, v) + sum_x w [u R(v)]_upper - sum_x w [u R(v)]_lower,
/// where R is the upward flux trace returned by upward_flux().
Field energy_laplacian(const LayerGrid& grid, const Field& psi);

/// Quadrature of grad(u) . grad(v) over the layer (cell-midpoint rule in sigma).
double gradient_energy(const LayerGrid& grid, const Field& u, const Field& v);

/// sqrt(1 + c'^2) * d(psi)/dn_up along the lower or upper boundary (c is the boundary curve).
LineField upward_flux(const LayerGrid& grid, const Field& psi, bool upper);

/// Upward unit normal derivative trace. On B this is psi_y; on the interface it is
/// the derivative along n1 for both layers; on S along n2.
LineField boundary_normal_derivative(const LayerGrid& grid, const Field& psi, Boundary boundary);

/// Nodal values on the lower or upper boundary row.
LineField boundary_trace(const LayerGrid& grid, const Field& psi, Boundary boundary);

/// Periodic quadrature along a boundary curve; dl multiplies by sqrt(1 + curve'^2).
double line_integral(const FlowDomain& domain, const LineField& trace, Boundary boundary, Measure measure);

double area_integral(const LayerGrid& grid, const Field& field);

/// Unit upward normal of a curve at x.
std::pair<double, double> unit_normal(const SurfaceCurve& curve, double x);

}  // namespace stratwave
