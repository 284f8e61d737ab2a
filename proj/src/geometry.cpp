#include "stratwave/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace stratwave {

using std::numbers::pi;

const char* to_string(Boundary b) noexcept {
  switch (b) {
    case Boundary::bottom: return "B";
    case Boundary::interface: return "S~";
    case Boundary::surface: return "S";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// SurfaceCurve

SurfaceCurve::SurfaceCurve(double mean, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
    : mean_(mean), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {}

bool SurfaceCurve::is_flat() const {
  for (double a : cos_)
    if (a != 0.0) return false;
  for (double b : sin_)
    if (b != 0.0) return false;
  return true;
}

double SurfaceCurve::value(double x) const {
  double v = mean_;
  for (std::size_t k = 0; k < cos_.size(); ++k) v += cos_[k] * std::cos((k + 1.0) * x);
  for (std::size_t k = 0; k < sin_.size(); ++k) v += sin_[k] * std::sin((k + 1.0) * x);
  return v;
}

double SurfaceCurve::d1(double x) const {
  double v = 0.0;
  for (std::size_t k = 0; k < cos_.size(); ++k) v -= (k + 1.0) * cos_[k] * std::sin((k + 1.0) * x);
  for (std::size_t k = 0; k < sin_.size(); ++k) v += (k + 1.0) * sin_[k] * std::cos((k + 1.0) * x);
  return v;
}

double SurfaceCurve::d2(double x) const {
  double v = 0.0;
  for (std::size_t k = 0; k < cos_.size(); ++k) v -= (k + 1.0) * (k + 1.0) * cos_[k] * std::cos((k + 1.0) * x);
  for (std::size_t k = 0; k < sin_.size(); ++k) v -= (k + 1.0) * (k + 1.0) * sin_[k] * std::sin((k + 1.0) * x);
  return v;
}

SurfaceCurve SurfaceCurve::operator+(const SurfaceCurve& o) const {
  std::vector<double> c(std::max(cos_.size(), o.cos_.size()), 0.0), s(std::max(sin_.size(), o.sin_.size()), 0.0);
  for (std::size_t k = 0; k < cos_.size(); ++k) c[k] += cos_[k];
  for (std::size_t k = 0; k < o.cos_.size(); ++k) c[k] += o.cos_[k];
  for (std::size_t k = 0; k < sin_.size(); ++k) s[k] += sin_[k];
  for (std::size_t k = 0; k < o.sin_.size(); ++k) s[k] += o.sin_[k];
  return SurfaceCurve(mean_ + o.mean_, std::move(c), std::move(s));
}

SurfaceCurve SurfaceCurve::scaled(double t) const {
  auto c = cos_, s = sin_;
  for (double& a : c) a *= t;
  for (double& b : s) b *= t;
  return SurfaceCurve(mean_ * t, std::move(c), std::move(s));
}

const SurfaceCurve& FlowDomain::curve(Boundary b) const {
  static const SurfaceCurve none;
  switch (b) {
    case Boundary::interface: return eta_tilde;
    case Boundary::surface: return eta;
    case Boundary::bottom: break;
  }
  return none;
}

FlowDomain build_domain(double d, SurfaceCurve eta_tilde, SurfaceCurve eta, int scan_points) {
  require(d > 0.0, ErrorCode::config, "depth d must be positive");
  FlowDomain dom;
  dom.d = d;
  dom.eta_tilde = std::move(eta_tilde);
  dom.eta = std::move(eta);
  double t1 = std::numeric_limits<double>::infinity(), t2 = t1;
  scan_points = std::max(scan_points, 64);
  for (int i = 0; i < scan_points; ++i) {
    const double x = -pi + 2 * pi * i / scan_points;
    const double et = dom.eta_tilde.value(x);
    t1 = std::min(t1, et + d);
    t2 = std::min(t2, dom.eta.value(x) - et);
  }
  dom.min_thickness1 = t1;
  dom.min_thickness2 = t2;
  if (t1 <= 0.0 || t2 <= 0.0) {
    std::ostringstream os;
    os << "layer collapse: min thickness (lower, upper) = (" << t1 << ", " << t2 << ")";
    fail(ErrorCode::collapse, os.str());
  }
  return dom;
}

// ---------------------------------------------------------------------------
// Grids

Eigen::MatrixXd periodic_derivative_matrix(int nx, XDerivative kind) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nx, nx);
  const double h = 2 * pi / nx;
  if (kind == XDerivative::spectral) {
    for (int j = 0; j < nx; ++j)
      for (int k = j + 1; k < nx; ++k) {
        const double sgn = ((k - j) % 2 == 0) ? 1.0 : -1.0;
        const double v = 0.5 * sgn / std::tan(0.5 * (j - k) * h);
        D(j, k) = v;
        D(k, j) = -v;
      }
  } else {
    for (int j = 0; j < nx; ++j) {
      D(j, (j + 1) % nx) += 8.0 / (12 * h);
      D(j, (j + nx - 1) % nx) -= 8.0 / (12 * h);
      D(j, (j + 2) % nx) -= 1.0 / (12 * h);
      D(j, (j + nx - 2) % nx) += 1.0 / (12 * h);
    }
  }
  return D;
}

LayerGrid::LayerGrid(int layer_id, const FlowDomain& domain, int nx, int ns, XDerivative xd)
    : layer_id_(layer_id), nx_(nx), ns_(ns), xd_(xd) {
  require(layer_id == 1 || layer_id == 2, ErrorCode::size, "layer id must be 1 or 2");
  require(nx >= 8 && nx % 2 == 0 && nx <= max_nx, ErrorCode::size, "nx must be even, >= 8 and <= 1024");
  require(ns >= 5 && ns <= max_ns, ErrorCode::size, "ns must be in [5, 513]");
  dx_ = 2 * pi / nx;
  dsigma_ = 1.0 / (ns - 1);
  x_.resize(nx);
  lower_.resize(nx);
  lower_x_.resize(nx);
  h_.resize(nx);
  hx_.resize(nx);
  for (int j = 0; j < nx; ++j) {
    const double x = -pi + j * dx_;
    x_[j] = x;
    double lo, lo_x, up, up_x;
    if (layer_id == 1) {
      lo = -domain.d;
      lo_x = 0.0;
      up = domain.eta_tilde.value(x);
      up_x = domain.eta_tilde.d1(x);
    } else {
      lo = domain.eta_tilde.value(x);
      lo_x = domain.eta_tilde.d1(x);
      up = domain.eta.value(x);
      up_x = domain.eta.d1(x);
    }
    lower_[j] = lo;
    lower_x_[j] = lo_x;
    h_[j] = up - lo;
    hx_[j] = up_x - lo_x;
    require(h_[j] > 0.0, ErrorCode::collapse, "layer thickness must be positive at every grid column");
  }
  dmat_ = std::make_shared<const Eigen::MatrixXd>(periodic_derivative_matrix(nx, xd));
}

double LayerGrid::area_weight(int j, int k) const {
  const double ws = (k == 0 || k == ns_ - 1) ? 0.5 * dsigma_ : dsigma_;
  return dx_ * ws * h_[j];
}

Field LayerGrid::sample(const std::function<double(double, double)>& f) const {
  Field out(size());
  for (int j = 0; j < nx_; ++j)
    for (int k = 0; k < ns_; ++k) out[index(j, k)] = f(x_[j], y(j, k));
  return out;
}

LayerGrids build_grids(const FlowDomain& domain, int nx, int ns1, int ns2, XDerivative xd) {
  return LayerGrids{LayerGrid(1, domain, nx, ns1, xd), LayerGrid(2, domain, nx, ns2, xd)};
}

// ---------------------------------------------------------------------------
// Operators

namespace {

using ColMap = Eigen::Map<const Eigen::MatrixXd>;

void check_size(const LayerGrid& grid, const Field& f) {
  if (f.size() != grid.size()) {
    std::ostringstream os;
    os << "field size " << f.size() << " does not match grid " << grid.nx() << "x" << grid.ns();
    fail(ErrorCode::size, os.str());
  }
}

// Rows: sigma index k, columns: x index j (matches the j*ns + k storage).
Eigen::MatrixXd x_derivative(const LayerGrid& grid, const Field& f) {
  ColMap m(f.data(), grid.ns(), grid.nx());
  return m * grid.dx_matrix().transpose();
}

double sigma_derivative(const ColMap& m, int k, int j, int ns, double ds) {
  if (k == 0) return (-3 * m(0, j) + 4 * m(1, j) - m(2, j)) / (2 * ds);
  if (k == ns - 1) return (3 * m(ns - 1, j) - 4 * m(ns - 2, j) + m(ns - 3, j)) / (2 * ds);
  return (m(k + 1, j) - m(k - 1, j)) / (2 * ds);
}

// Midpoint quantities of cell c = k+1/2 in column j.
struct CellFlux {
  double vx;  // physical x-derivative at the midpoint
  double vy;  // physical y-derivative at the midpoint
};

inline CellFlux cell_gradient(const LayerGrid& grid, const ColMap& v, const Eigen::MatrixXd& vxi, int j, int c) {
  const double ds = grid.dsigma();
  const double delta = (v(c + 1, j) - v(c, j)) / ds;
  const double xi_bar = 0.5 * (vxi(c, j) + vxi(c + 1, j));
  const double sm = (c + 0.5) * ds;
  const double sx = grid.sigma_x(j, sm);
  return {xi_bar + sx * delta, delta / grid.thickness(j)};
}

}  // namespace

Gradient mapped_gradient(const LayerGrid& grid, const Field& psi) {
  check_size(grid, psi);
  const int nx = grid.nx(), ns = grid.ns();
  const Eigen::MatrixXd fxi = x_derivative(grid, psi);
  ColMap m(psi.data(), ns, nx);
  Gradient g{Field(grid.size()), Field(grid.size())};
  for (int j = 0; j < nx; ++j) {
    const double h = grid.thickness(j);
    for (int k = 0; k < ns; ++k) {
      const double fs = sigma_derivative(m, k, j, ns, grid.dsigma());
      g.x[grid.index(j, k)] = fxi(k, j) + grid.sigma_x(j, grid.sigma(k)) * fs;
      g.y[grid.index(j, k)] = fs / h;
    }
  }
  return g;
}

double gradient_energy(const LayerGrid& grid, const Field& u, const Field& v) {
  check_size(grid, u);
  check_size(grid, v);
  const int nx = grid.nx(), ns = grid.ns();
  const Eigen::MatrixXd uxi = x_derivative(grid, u);
  const Eigen::MatrixXd vxi = (&u == &v) ? uxi : x_derivative(grid, v);
  ColMap mu(u.data(), ns, nx), mv(v.data(), ns, nx);
  double total = 0.0;
  for (int j = 0; j < nx; ++j) {
    double col = 0.0;
    for (int c = 0; c + 1 < ns; ++c) {
      const CellFlux a = cell_gradient(grid, mu, uxi, j, c);
      const CellFlux b = cell_gradient(grid, mv, vxi, j, c);
      col += a.vx * b.vx + a.vy * b.vy;
    }
    total += col * grid.thickness(j);
  }
  return total * grid.dx() * grid.dsigma();
}

LineField upward_flux(const LayerGrid& grid, const Field& psi, bool upper) {
  check_size(grid, psi);
  const int nx = grid.nx(), ns = grid.ns();
  const int k = upper ? ns - 1 : 0;
  const double s = upper ? 1.0 : 0.0;
  const Eigen::MatrixXd fxi = x_derivative(grid, psi);
  ColMap m(psi.data(), ns, nx);
  LineField r(nx);
  for (int j = 0; j < nx; ++j) {
    const double h = grid.thickness(j);
    const double sx = grid.sigma_x(j, s);
    const double fs = sigma_derivative(m, k, j, ns, grid.dsigma());
    // h*sigma_x*psi_x + psi_y  ==  psi_y - c'(x) psi_x
    r[j] = h * sx * (fxi(k, j) + sx * fs) + fs / h;
  }
  return r;
}

Field energy_laplacian(const LayerGrid& grid, const Field& psi) {
  check_size(grid, psi);
  const int nx = grid.nx(), ns = grid.ns();
  const double ds = grid.dsigma(), wx = grid.dx();
  const Eigen::MatrixXd vxi = x_derivative(grid, psi);
  ColMap v(psi.data(), ns, nx);
  // Cell fluxes: P = h * v_x (x-flux), R = h*sigma_x*v_x + v_y (sigma-flux).
  Eigen::MatrixXd P(ns - 1, nx), R(ns - 1, nx);
  for (int j = 0; j < nx; ++j) {
    const double h = grid.thickness(j);
    for (int c = 0; c + 1 < ns; ++c) {
      const CellFlux cf = cell_gradient(grid, v, vxi, j, c);
      const double sx = grid.sigma_x(j, (c + 0.5) * ds);
      P(c, j) = h * cf.vx;
      R(c, j) = h * sx * cf.vx + cf.vy;
    }
  }
  // d(energy)/du of the x-flux part: (w ds / 2) D^T (P_{k-1/2} + P_{k+1/2}).
  const Eigen::MatrixXd DtP = P * grid.dx_matrix();  // row c: (D^T P_c)^T
  const LineField top = upward_flux(grid, psi, true);
  const LineField bot = upward_flux(grid, psi, false);
  Field out(grid.size());
  for (int j = 0; j < nx; ++j) {
    for (int k = 0; k < ns; ++k) {
      double a = 0.0;  // (A v)_{jk} / wx
      if (k > 0) a += R(k - 1, j) + 0.5 * ds * DtP(k - 1, j);
      if (k + 1 < ns) a += -R(k, j) + 0.5 * ds * DtP(k, j);
      double rhs = -a;
      if (k == ns - 1) rhs += top[j];
      if (k == 0) rhs -= bot[j];
      out[grid.index(j, k)] = rhs * wx / grid.area_weight(j, k);
    }
  }
  return out;
}

Field mapped_laplacian(const LayerGrid& grid, const Field& psi) {
  Field lap = energy_laplacian(grid, psi);
  const int ns = grid.ns();
  for (int j = 0; j < grid.nx(); ++j) {
    auto at = [&](int k) { return lap[grid.index(j, k)]; };
    lap[grid.index(j, 0)] = 3 * at(1) - 3 * at(2) + at(3);
    lap[grid.index(j, ns - 1)] = 3 * at(ns - 2) - 3 * at(ns - 3) + at(ns - 4);
  }
  return lap;
}

namespace {

bool upper_side(const LayerGrid& grid, Boundary boundary) {
  if (boundary == grid.upper_boundary()) return true;
  if (boundary == grid.lower_boundary()) return false;
  std::ostringstream os;
  os << "boundary " << to_string(boundary) << " does not belong to layer " << grid.layer_id();
  fail(ErrorCode::wrong_boundary, os.str());
}

}  // namespace

LineField boundary_normal_derivative(const LayerGrid& grid, const Field& psi, Boundary boundary) {
  const bool upper = upper_side(grid, boundary);
  LineField r = upward_flux(grid, psi, upper);
  for (int j = 0; j < grid.nx(); ++j) {
    const double slope = upper ? grid.upper_x(j) : grid.lower_x(j);
    r[j] /= std::sqrt(1.0 + slope * slope);
  }
  return r;
}

LineField boundary_trace(const LayerGrid& grid, const Field& psi, Boundary boundary) {
  check_size(grid, psi);
  const bool upper = upper_side(grid, boundary);
  const int k = upper ? grid.ns() - 1 : 0;
  LineField t(grid.nx());
  for (int j = 0; j < grid.nx(); ++j) t[j] = psi[grid.index(j, k)];
  return t;
}

double line_integral(const FlowDomain& domain, const LineField& trace, Boundary boundary, Measure measure) {
  const int nx = static_cast<int>(trace.size());
  require(nx > 0, ErrorCode::size, "empty boundary trace");
  const double w = 2 * pi / nx;
  double total = 0.0;
  if (measure == Measure::dx || boundary == Boundary::bottom) {
    for (int j = 0; j < nx; ++j) total += trace[j];
    return total * w;
  }
  const SurfaceCurve& c = domain.curve(boundary);
  for (int j = 0; j < nx; ++j) {
    const double s = c.d1(-pi + j * w);
    total += trace[j] * std::sqrt(1.0 + s * s);
  }
  return total * w;
}

double area_integral(const LayerGrid& grid, const Field& field) {
  check_size(grid, field);
  double total = 0.0;
  for (int j = 0; j < grid.nx(); ++j) {
    double col = 0.0;
    for (int k = 0; k < grid.ns(); ++k) col += grid.area_weight(j, k) * field[grid.index(j, k)];
    total += col;
  }
  return total;
}

std::pair<double, double> unit_normal(const SurfaceCurve& curve, double x) {
  const double s = curve.d1(x);
  const double n = std::sqrt(1.0 + s * s);
  return {-s / n, 1.0 / n};
}

}  // namespace stratwave
