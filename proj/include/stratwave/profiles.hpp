#pragma once

// Per-layer density and vorticity profiles, and the Bernoulli maps F_i built
// by inverting p -> g*y*rho'(p) - beta(-p).

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stratwave/errors.hpp"

namespace stratwave {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12, double abs_tol = 1e-15);

/// A smooth scalar function of one variable with two derivatives and an antiderivative.
class ScalarProfile {
 public:
  enum class Kind { constant, linear, polynomial, tabulated, custom };

  struct CustomFns {
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    std::function<double(double)> antiderivative;  // optional
  };

  static ScalarProfile constant(double value);
  static ScalarProfile linear(double value_at_zero, double slope);
  static ScalarProfile polynomial(std::vector<double> coefficients);
  /// Monotone piecewise-cubic (Fritsch-Carlson) interpolant; linear extrapolation outside the knots.
  static ScalarProfile tabulated(std::vector<double> knots, std::vector<double> values);
  static ScalarProfile custom(CustomFns fns);

  Kind kind() const { return kind_; }
  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  /// Integral of the profile over [a, b] (exact for polynomial and tabulated kinds).
  double integral(double a, double b) const;

  /// Natural range: the knot span for tabulated profiles, unbounded otherwise.
  Interval natural_range() const;

  const std::vector<double>& coefficients() const { return poly_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> poly_;
  std::vector<double> knots_, values_, slopes_, cumulative_;
  std::shared_ptr<const CustomFns> custom_;

  std::size_t segment(double t) const;
};

/// Density rho(s) and vorticity function beta(q) of one layer.
struct LayerProfiles {
  int layer_id = 1;
  ScalarProfile rho = ScalarProfile::constant(1.0);
  ScalarProfile beta = ScalarProfile::constant(0.0);
  Interval s_range{-1e6, 1e6};
  Interval q_range{-1e6, 1e6};

  double rho_at(double s) const { return rho.value(s); }
  double rho_prime(double s) const { return rho.d1(s); }
  double rho_second(double s) const { return rho.d2(s); }
  double beta_at(double q) const { return beta.value(q); }
  double beta_prime(double q) const { return beta.d1(q); }

  /// Sample rho > 0, rho' <= 0 on s_range and beta' < 0 on q_range. Returns
  /// human-readable descriptions of the violated invariants (empty when all hold).
  std::vector<std::string> check_invariants(int n_samples = 257) const;
};

/// Phi_y(p) = g*y*rho'(p) - beta(-p). Throws ErrorCode::domain when p or -p leaves the ranges.
double phi_forward(const LayerProfiles& profiles, double g, double y, double p);

/// d/dp Phi_y(p) = g*y*rho''(p) + beta'(-p).
double phi_slope(const LayerProfiles& profiles, double g, double y, double p);

struct ProfileValidationReport {
  bool monotone = false;
  Interval y_range;
  Interval p_window;
  double min_abs_slope = 0.0;
  int slope_sign = 0;
  std::vector<std::pair<double, double>> violations;  // (y, p) samples breaking monotonicity
};

/// Sample (Phi_y)'(p) on an n_samples x n_samples grid of the rectangle.
ProfileValidationReport validate_profiles(const LayerProfiles& profiles, double g, Interval y_range,
                                          Interval p_window, int n_samples);

/// Solve Phi_y(p) = m for p inside the window. Validates monotonicity at this y first.
double phi_invert(const LayerProfiles& profiles, double g, double y, double m, Interval window);

struct MapWindow {
  Interval y;
  Interval p;
};

/// F(y, m) with partial derivatives, normalised by a base point p0 and an additive offset C(y):
///   F(y, m) = integral from Phi_y(p0) to m of (Phi_y)^{-1}(s) ds + C(y).
class BernoulliMap {
 public:
  struct Offset {
    std::function<double(double)> value;
    std::function<double(double)> derivative;  // central differences when empty
  };

  struct Eval {
    double p = 0.0;    // (Phi_y)^{-1}(m) == d2F
    double F = 0.0;
    double d1F = 0.0;
    double d2F = 0.0;
    double d22F = 0.0;
  };

  /// Throws ErrorCode::non_monotone when Phi is not strictly monotone on the window.
  BernoulliMap(std::shared_ptr<const LayerProfiles> profiles, double g, MapWindow window, double base_p,
               Offset offset, int validation_samples = 48);

  int layer_id() const { return profiles_->layer_id; }
  double g() const { return g_; }
  double base_p() const { return base_p_; }
  const MapWindow& window() const { return window_; }
  const LayerProfiles& profiles() const { return *profiles_; }
  const ProfileValidationReport& validation() const { return validation_; }

  /// Phi_y restricted to the window, mapped to the m axis.
  Interval m_image(double y) const;
  bool in_window(double y, double m) const;

  /// Throws ErrorCode::window when (y, m) is outside the validated window.
  Eval evaluate(double y, double m) const;
  double F(double y, double m) const { return evaluate(y, m).F; }
  double d1F(double y, double m) const { return evaluate(y, m).d1F; }
  double d2F(double y, double m) const { return evaluate(y, m).d2F; }
  double d22F(double y, double m) const { return evaluate(y, m).d22F; }

  /// F at a point where the inverse is already known (m = Phi_y(p)).
  double F_at_known_p(double y, double p) const;
  double d1F_at_known_p(double y, double p) const;

 private:
  std::shared_ptr<const LayerProfiles> profiles_;
  double g_;
  MapWindow window_;
  double base_p_;
  Offset offset_;
  ProfileValidationReport validation_;

  double invert(double y, double m) const;
  double offset_value(double y) const;
  double offset_derivative(double y) const;
};

struct BernoulliMaps {
  std::shared_ptr<const BernoulliMap> layer1;
  std::shared_ptr<const BernoulliMap> layer2;
  const BernoulliMap& operator[](int layer) const { return layer == 1 ? *layer1 : *layer2; }
};

/// Build F_1, F_2 with the normalisations F_2(y, Phi2_y(p2)) = 0 and
/// F_1(y, Phi1_y(0)) = F_2(y, Phi2_y(0)). A custom offset replaces the default for F_1 or F_2.
BernoulliMaps build_bernoulli_maps(std::shared_ptr<const LayerProfiles> layer1,
                                   std::shared_ptr<const LayerProfiles> layer2, double g, double p2,
                                   const MapWindow& window1, const MapWindow& window2,
                                   std::optional<BernoulliMap::Offset> custom_offset1 = std::nullopt,
                                   std::optional<BernoulliMap::Offset> custom_offset2 = std::nullopt);

}  // namespace stratwave
