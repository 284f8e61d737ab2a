#include "stratwave/profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace stratwave {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::domain: return "domain";
    case ErrorCode::non_monotone: return "non_monotone";
    case ErrorCode::bracket: return "bracket";
    case ErrorCode::collapse: return "collapse";
    case ErrorCode::size: return "size";
    case ErrorCode::trace: return "trace";
    case ErrorCode::window: return "window";
    case ErrorCode::admissibility: return "admissibility";
    case ErrorCode::config: return "config";
    case ErrorCode::solver: return "solver";
    case ErrorCode::wrong_boundary: return "wrong_boundary";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kXk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                       0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                       0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                       0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                       0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                       0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                       0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

std::pair<double, double> gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWk[7];
  double gauss = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = r * kXk[i];
    const double fs = f(c - dx) + f(c + dx);
    kron += kWk[i] * fs;
    if (i % 2 == 1) gauss += kWg[i / 2] * fs;
  }
  return {kron * r, std::abs((kron - gauss) * r)};
}

double gk_recurse(const std::function<double(double)>& f, double a, double b, double whole, double err,
                  double tol, int depth) {
  if (err <= tol || depth > 40) return whole;
  const double m = 0.5 * (a + b);
  auto [l, el] = gk15(f, a, m);
  auto [r, er] = gk15(f, m, b);
  return gk_recurse(f, a, m, l, el, 0.5 * tol, depth + 1) + gk_recurse(f, m, b, r, er, 0.5 * tol, depth + 1);
}

double poly_eval(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

std::vector<double> poly_antiderivative(const std::vector<double>& c) {
  std::vector<double> a(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) a[k + 1] = c[k] / static_cast<double>(k + 1);
  return a;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double abs_tol) {
  if (a == b) return 0.0;
  auto [whole, err] = gk15(f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  return gk_recurse(f, a, b, whole, err, tol, 0);
}

namespace {

struct Hermite {
  double x0, h, y0, y1, m0, m1;
  double value(double t) const {
    const double s = (t - x0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
  }
  double d1(double t) const {
    const double s = (t - x0) / h;
    return ((6 * s * s - 6 * s) * y0 + (3 * s * s - 4 * s + 1) * h * m0 + (-6 * s * s + 6 * s) * y1 +
            (3 * s * s - 2 * s) * h * m1) /
           h;
  }
  double d2(double t) const {
    const double s = (t - x0) / h;
    return ((12 * s - 6) * y0 + (6 * s - 4) * h * m0 + (-12 * s + 6) * y1 + (6 * s - 2) * h * m1) / (h * h);
  }
  // Integral from x0 to t.
  double integral_to(double t) const {
    const double s = (t - x0) / h;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
    const double i00 = s - s3 + 0.5 * s4;
    const double i10 = 0.5 * s2 - 2.0 / 3.0 * s3 + 0.25 * s4;
    const double i01 = s3 - 0.5 * s4;
    const double i11 = 0.25 * s4 - s3 / 3.0;
    return h * (i00 * y0 + i10 * h * m0 + i01 * y1 + i11 * h * m1);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// ScalarProfile

ScalarProfile ScalarProfile::constant(double value) {
  ScalarProfile p;
  p.kind_ = Kind::constant;
  p.poly_ = {value};
  return p;
}

ScalarProfile ScalarProfile::linear(double value_at_zero, double slope) {
  ScalarProfile p;
  p.kind_ = Kind::linear;
  p.poly_ = {value_at_zero, slope};
  return p;
}

ScalarProfile ScalarProfile::polynomial(std::vector<double> coefficients) {
  require(!coefficients.empty(), ErrorCode::config, "polynomial profile needs at least one coefficient");
  ScalarProfile p;
  p.kind_ = Kind::polynomial;
  p.poly_ = std::move(coefficients);
  return p;
}

ScalarProfile ScalarProfile::tabulated(std::vector<double> knots, std::vector<double> values) {
  require(knots.size() >= 2 && knots.size() == values.size(), ErrorCode::config,
          "tabulated profile needs >= 2 knots and matching values");
  for (std::size_t i = 1; i < knots.size(); ++i)
    require(knots[i] > knots[i - 1], ErrorCode::config, "tabulated knots must be strictly increasing");
  ScalarProfile p;
  p.kind_ = Kind::tabulated;
  const std::size_t n = knots.size();
  std::vector<double> delta(n - 1), m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
  // Three-point slopes, then the Fritsch-Carlson limiter.
  m[0] = delta[0];
  m[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots[i] - knots[i - 1], h1 = knots[i + 1] - knots[i];
    m[i] = (delta[i - 1] * h1 + delta[i] * h0) / (h0 + h1);
  }
  if (n >= 3) {
    const double h0 = knots[1] - knots[0], h1 = knots[2] - knots[1];
    m[0] = ((2 * h0 + h1) * delta[0] - h0 * delta[1]) / (h0 + h1);
    const double g0 = knots[n - 2] - knots[n - 3], g1 = knots[n - 1] - knots[n - 2];
    m[n - 1] = ((2 * g1 + g0) * delta[n - 2] - g1 * delta[n - 3]) / (g0 + g1);
    if (m[0] * delta[0] <= 0) m[0] = 0.0;
    if (m[n - 1] * delta[n - 2] <= 0) m[n - 1] = 0.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      m[i] = m[i + 1] = 0.0;
      continue;
    }
    if (m[i] * delta[i] < 0) m[i] = 0.0;
    if (m[i + 1] * delta[i] < 0) m[i + 1] = 0.0;
    const double a = m[i] / delta[i], b = m[i + 1] / delta[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * a * delta[i];
      m[i + 1] = tau * b * delta[i];
    }
  }
  p.knots_ = std::move(knots);
  p.values_ = std::move(values);
  p.slopes_ = std::move(m);
  p.cumulative_.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Hermite hm{p.knots_[i], p.knots_[i + 1] - p.knots_[i], p.values_[i], p.values_[i + 1], p.slopes_[i],
               p.slopes_[i + 1]};
    p.cumulative_[i + 1] = p.cumulative_[i] + hm.integral_to(p.knots_[i + 1]);
  }
  return p;
}

ScalarProfile ScalarProfile::custom(CustomFns fns) {
  require(static_cast<bool>(fns.value) && static_cast<bool>(fns.d1) && static_cast<bool>(fns.d2),
          ErrorCode::config, "custom profile needs value, d1 and d2");
  ScalarProfile p;
  p.kind_ = Kind::custom;
  p.custom_ = std::make_shared<const CustomFns>(std::move(fns));
  return p;
}

std::size_t ScalarProfile::segment(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(i, knots_.size() - 2);
}


double ScalarProfile::value(double t) const {
  switch (kind_) {
    case Kind::constant:
    case Kind::linear:
    case Kind::polynomial: return poly_eval(poly_, t);
    case Kind::custom: return custom_->value(t);
    case Kind::tabulated: {
      if (t < knots_.front()) return values_.front() + slopes_.front() * (t - knots_.front());
      if (t > knots_.back()) return values_.back() + slopes_.back() * (t - knots_.back());
      const std::size_t i = segment(t);
      Hermite hm{knots_[i], knots_[i + 1] - knots_[i], values_[i], values_[i + 1], slopes_[i], slopes_[i + 1]};
      return hm.value(t);
    }
  }
  return 0.0;
}

double ScalarProfile::d1(double t) const {
  switch (kind_) {
    case Kind::constant:
    case Kind::linear:
    case Kind::polynomial: return poly_eval(poly_derivative(poly_), t);
    case Kind::custom: return custom_->d1(t);
    case Kind::tabulated: {
      if (t < knots_.front()) return slopes_.front();
      if (t > knots_.back()) return slopes_.back();
      const std::size_t i = segment(t);
      Hermite hm{knots_[i], knots_[i + 1] - knots_[i], values_[i], values_[i + 1], slopes_[i], slopes_[i + 1]};
      return hm.d1(t);
    }
  }
  return 0.0;
}

double ScalarProfile::d2(double t) const {
  switch (kind_) {
    case Kind::constant:
    case Kind::linear:
    case Kind::polynomial: return poly_eval(poly_derivative(poly_derivative(poly_)), t);
    case Kind::custom: return custom_->d2(t);
    case Kind::tabulated: {
      if (t < knots_.front() || t > knots_.back()) return 0.0;
      const std::size_t i = segment(t);
      Hermite hm{knots_[i], knots_[i + 1] - knots_[i], values_[i], values_[i + 1], slopes_[i], slopes_[i + 1]};
      return hm.d2(t);
    }
  }
  return 0.0;
}

double ScalarProfile::integral(double a, double b) const {
  switch (kind_) {
    case Kind::constant:
    case Kind::linear:
    case Kind::polynomial: {
      const auto anti = poly_antiderivative(poly_);
      return poly_eval(anti, b) - poly_eval(anti, a);
    }
    case Kind::custom:
      if (custom_->antiderivative) return custom_->antiderivative(b) - custom_->antiderivative(a);
      return integrate_adaptive(custom_->value, a, b);
    case Kind::tabulated: {
      if (a > b) return -integral(b, a);
      // Primitive measured from the first knot.
      auto primitive = [this](double t) {
        const double x0 = knots_.front(), xn = knots_.back();
        if (t <= x0) {
          const double dt = t - x0;
          return values_.front() * dt + 0.5 * slopes_.front() * dt * dt;
        }
        const std::size_t last = t >= xn ? knots_.size() - 1 : segment(t);
        const double acc = cumulative_[last];
        if (t >= xn) {
          const double dt = t - xn;
          return acc + values_.back() * dt + 0.5 * slopes_.back() * dt * dt;
        }
        Hermite hm{knots_[last], knots_[last + 1] - knots_[last], values_[last], values_[last + 1], slopes_[last],
                   slopes_[last + 1]};
        return acc + hm.integral_to(t);
      };
      return primitive(b) - primitive(a);
    }
  }
  return 0.0;
}

Interval ScalarProfile::natural_range() const {
  if (kind_ == Kind::tabulated) return {knots_.front(), knots_.back()};
  constexpr double big = 1e6;
  return {-big, big};
}

// ---------------------------------------------------------------------------
// LayerProfiles

std::vector<std::string> LayerProfiles::check_invariants(int n_samples) const {
  std::vector<std::string> out;
  n_samples = std::max(n_samples, 2);
  auto sample = [n_samples](const Interval& r, int k) {
    const double lo = std::max(r.lo, -1e3), hi = std::min(r.hi, 1e3);
    return lo + (hi - lo) * k / (n_samples - 1);
  };
  bool rho_pos = true, rho_dec = true, beta_dec = true;
  for (int k = 0; k < n_samples; ++k) {
    const double s = sample(s_range, k);
    if (rho.value(s) <= 0) rho_pos = false;
    if (rho.d1(s) > 0) rho_dec = false;
    const double q = sample(q_range, k);
    if (beta.d1(q) >= 0) beta_dec = false;
  }
  const std::string tag = "layer " + std::to_string(layer_id) + ": ";
  if (!rho_pos) out.push_back(tag + "rho(s) > 0 violated on s_range");
  if (!rho_dec) out.push_back(tag + "rho'(s) <= 0 violated on s_range");
  if (!beta_dec) out.push_back(tag + "beta'(q) < 0 violated on q_range");
  return out;
}

double phi_forward(const LayerProfiles& profiles, double g, double y, double p) {
  if (!profiles.s_range.contains(p) || !profiles.q_range.contains(-p)) {
    std::ostringstream os;
    os << "phi_forward: p = " << p << " outside declared ranges of layer " << profiles.layer_id;
    fail(ErrorCode::domain, os.str());
  }
  return g * y * profiles.rho_prime(p) - profiles.beta_at(-p);
}

double phi_slope(const LayerProfiles& profiles, double g, double y, double p) {
  return g * y * profiles.rho_second(p) + profiles.beta_prime(-p);
}

ProfileValidationReport validate_profiles(const LayerProfiles& profiles, double g, Interval y_range,
                                          Interval p_window, int n_samples) {
  require(n_samples >= 2, ErrorCode::config, "validate_profiles needs n_samples >= 2");
  ProfileValidationReport rep;
  rep.y_range = y_range;
  rep.p_window = p_window;
  double min_abs = std::numeric_limits<double>::infinity();
  int n_pos = 0, n_neg = 0, n_zero = 0;
  std::vector<std::tuple<double, double, double>> samples;
  samples.reserve(static_cast<std::size_t>(n_samples) * n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double y = y_range.lo + y_range.width() * i / (n_samples - 1);
    for (int j = 0; j < n_samples; ++j) {
      const double p = p_window.lo + p_window.width() * j / (n_samples - 1);
      const double s = phi_slope(profiles, g, y, p);
      samples.emplace_back(y, p, s);
      min_abs = std::min(min_abs, std::abs(s));
      if (s > 0) ++n_pos;
      else if (s < 0) ++n_neg;
      else ++n_zero;
    }
  }
  rep.slope_sign = n_pos >= n_neg ? (n_pos > 0 ? 1 : 0) : -1;
  if (n_pos == 0 && n_neg == 0) rep.slope_sign = 0;
  for (const auto& [y, p, s] : samples) {
    const bool bad = rep.slope_sign == 0 || s == 0.0 || (s > 0) != (rep.slope_sign > 0);
    if (bad && rep.violations.size() < 32) rep.violations.emplace_back(y, p);
  }
  const bool one_sign = (n_pos == 0 || n_neg == 0) && n_zero == 0;
  rep.min_abs_slope = min_abs;
  rep.monotone = one_sign && min_abs > 0.0;
  return rep;
}

namespace {

// Bracketed bisection with safeguarded Newton steps. Phi is monotone on [lo, hi].
double invert_monotone(const LayerProfiles& profiles, double g, double y, double m, Interval window,
                       ErrorCode outside_code) {
  double lo = window.lo, hi = window.hi;
  double flo = phi_forward(profiles, g, y, lo) - m;
  double fhi = phi_forward(profiles, g, y, hi) - m;
  const double scale = std::max({1.0, std::abs(m)});
  const double ftol = 4e-15 * scale;
  if (std::abs(flo) <= ftol) return lo;
  if (std::abs(fhi) <= ftol) return hi;
  if ((flo > 0) == (fhi > 0)) {
    std::ostringstream os;
    os << "value m = " << m << " outside the image of Phi_y on [" << window.lo << ", " << window.hi
       << "] at y = " << y << " (layer " << profiles.layer_id << ")";
    fail(outside_code, os.str());
  }
  // Regula falsi starting point, then Newton where it stays inside the bracket.
  double p = lo - flo * (hi - lo) / (fhi - flo);
  for (int it = 0; it < 200; ++it) {
    const double f = phi_forward(profiles, g, y, p) - m;
    if (std::abs(f) <= ftol) return p;
    if ((f > 0) == (flo > 0)) {
      lo = p;
      flo = f;
    } else {
      hi = p;
      fhi = f;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(p))) return 0.5 * (lo + hi);
    const double slope = phi_slope(profiles, g, y, p);
    double next = slope != 0.0 ? p - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    p = next;
  }
  return p;
}

}  // namespace

double phi_invert(const LayerProfiles& profiles, double g, double y, double m, Interval window) {
  const auto rep = validate_profiles(profiles, g, {y, y}, window, 64);
  if (!rep.monotone) {
    std::ostringstream os;
    os << "Phi_y is not strictly monotone on [" << window.lo << ", " << window.hi << "] at y = " << y
       << " (min |slope| = " << rep.min_abs_slope << ")";
    fail(ErrorCode::non_monotone, os.str());
  }
  return invert_monotone(profiles, g, y, m, window, ErrorCode::bracket);
}

// ---------------------------------------------------------------------------
// BernoulliMap

BernoulliMap::BernoulliMap(std::shared_ptr<const LayerProfiles> profiles, double g, MapWindow window, double base_p,
                           Offset offset, int validation_samples)
    : profiles_(std::move(profiles)), g_(g), window_(window), base_p_(base_p), offset_(std::move(offset)) {
  require(profiles_ != nullptr, ErrorCode::config, "BernoulliMap needs profiles");
  validation_ = validate_profiles(*profiles_, g_, window_.y, window_.p, validation_samples);
  if (!validation_.monotone) {
    std::ostringstream os;
    os << "layer " << profiles_->layer_id << ": Phi_y not strictly monotone on window y in [" << window_.y.lo
       << ", " << window_.y.hi << "], p in [" << window_.p.lo << ", " << window_.p.hi
       << "] (min |slope| = " << validation_.min_abs_slope << ")";
    fail(ErrorCode::non_monotone, os.str());
  }
}

Interval BernoulliMap::m_image(double y) const {
  const double a = phi_forward(*profiles_, g_, y, window_.p.lo);
  const double b = phi_forward(*profiles_, g_, y, window_.p.hi);
  return {std::min(a, b), std::max(a, b)};
}

bool BernoulliMap::in_window(double y, double m) const {
  if (!window_.y.contains(y, 1e-12 * std::max(1.0, window_.y.width()))) return false;
  return m_image(y).contains(m);
}

double BernoulliMap::invert(double y, double m) const {
  if (!window_.y.contains(y, 1e-12 * std::max(1.0, window_.y.width()))) {
    std::ostringstream os;
    os << "layer " << profiles_->layer_id << ": y = " << y << " outside the Bernoulli-map window";
    fail(ErrorCode::window, os.str());
  }
  return invert_monotone(*profiles_, g_, y, m, window_.p, ErrorCode::window);
}

double BernoulliMap::offset_value(double y) const { return offset_.value ? offset_.value(y) : 0.0; }

double BernoulliMap::offset_derivative(double y) const {
  if (!offset_.value) return 0.0;
  if (offset_.derivative) return offset_.derivative(y);
  const double h = 1e-5 * std::max(1.0, window_.y.width());
  return (offset_.value(y + h) - offset_.value(y - h)) / (2 * h);
}

double BernoulliMap::F_at_known_p(double y, double p) const {
  // Integration by parts of int (Phi_y)^{-1}(s) ds with s = Phi_y(t):
  //   F = p*m - p0*m0 - int_{p0}^{p} Phi_y(t) dt + C(y).
  const auto& pr = *profiles_;
  const double p0 = base_p_;
  const double m = phi_forward(pr, g_, y, p);
  const double m0 = phi_forward(pr, g_, y, p0);
  const double phi_integral = g_ * y * (pr.rho_at(p) - pr.rho_at(p0)) + pr.beta.integral(-p0, -p);
  return p * m - p0 * m0 - phi_integral + offset_value(y);
}

double BernoulliMap::d1F_at_known_p(double y, double p) const {
  const auto& pr = *profiles_;
  const double p0 = base_p_;
  return -p0 * g_ * pr.rho_prime(p0) - g_ * (pr.rho_at(p) - pr.rho_at(p0)) + offset_derivative(y);
}

BernoulliMap::Eval BernoulliMap::evaluate(double y, double m) const {
  Eval e;
  e.p = invert(y, m);
  e.d2F = e.p;
  e.d22F = 1.0 / phi_slope(*profiles_, g_, y, e.p);
  e.F = F_at_known_p(y, e.p);
  e.d1F = d1F_at_known_p(y, e.p);
  return e;
}

BernoulliMaps build_bernoulli_maps(std::shared_ptr<const LayerProfiles> layer1,
                                   std::shared_ptr<const LayerProfiles> layer2, double g, double p2,
                                   const MapWindow& window1, const MapWindow& window2,
                                   std::optional<BernoulliMap::Offset> custom_offset1,
                                   std::optional<BernoulliMap::Offset> custom_offset2) {
  require(window2.p.contains(p2), ErrorCode::config, "layer-2 map window must contain p2");
  require(window1.p.contains(0.0) && window2.p.contains(0.0), ErrorCode::config,
          "map windows must contain the interface value p = 0");
  BernoulliMaps maps;
  maps.layer2 = std::make_shared<const BernoulliMap>(layer2, g, window2, p2,
                                                     custom_offset2.value_or(BernoulliMap::Offset{}));
  if (custom_offset1) {
    maps.layer1 = std::make_shared<const BernoulliMap>(layer1, g, window1, 0.0, *custom_offset1);
  } else {
    // Interface matching: F_1(y, Phi1_y(0)) = F_2(y, Phi2_y(0)); the layer-2 inverse at that point is 0.
    std::shared_ptr<const BernoulliMap> f2 = maps.layer2;
    BernoulliMap::Offset off;
    off.value = [f2](double y) { return f2->F_at_known_p(y, 0.0); };
    off.derivative = [f2](double y) { return f2->d1F_at_known_p(y, 0.0); };
    maps.layer1 = std::make_shared<const BernoulliMap>(layer1, g, window1, 0.0, std::move(off));
  }
  return maps;
}

}  // namespace stratwave
