#include "cdistab/modified_saturation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cdistab/errors.hpp"
#include "cdistab/quadrature.hpp"

namespace cdistab {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// 1 - sin(v) without cancellation near pi/2.
double one_minus_sin(double v) {
  const double w = std::sin(0.5 * (kHalfPi - v));
  return 2.0 * w * w;
}

double hermite_value(double t, double h, double y0, double y1, double d0, double d1) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * h * d1;
}

double hermite_slope(double t, double h, double y0, double y1, double d0, double d1) {
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 +
          (3 * t2 - 2 * t) * h * d1) /
         h;
}

}  // namespace

double h_weight(double v) {
  if (v >= kHalfPi) return 0.5;
  const double s = std::sin(v);
  // (1 - s) / cos^2 = 1 / (1 + s), so h = s / (1 + s) + s (1 - s).
  return s / (1.0 + s) + s * (1.0 - s);
}

ModifiedSaturation::ModifiedSaturation(SaturationFn sigma, ModSatOptions options)
    : sigma_(std::move(sigma)), options_(options) {
  if (!(options_.abs_tol > 0.0) || !(options_.max_spacing > 0.0) ||
      !(options_.table_radius > 0.0) || !(options_.cell_tol > 0.0) ||
      !(options_.slope_tol > 0.0)) {
    throw UsageError("ModifiedSaturation: tolerances and table radius must be positive");
  }
  if (sigma_.kind() == SaturationKind::Custom) {
    const ValidationReport rep = validate_saturation(sigma_);
    if (!rep.pass()) {
      throw InvalidFunctionError("ModifiedSaturation: custom sigma fails saturation axioms");
    }
  }
  s_prime_0_ = exact_derivative(0.0);
  s_inf_ = exact_value(1e12 * sigma_.input_scale());
  build_table();
}

// Integrates kernel(v) over [0, pi/2]. The interval is cut where xi sin v hits
// a kink of sigma and along a geometric ladder xi sin v = scale 2^k, so each
// piece sees sigma on a single length scale. The kernel receives the piece
// bounds so it can take one-sided limits at a kink sitting on an endpoint.
template <typename Kernel>
double ModifiedSaturation::integrate_kernel(Kernel&& kernel, double xi, const char* what) const {
  const double a = std::fabs(xi);
  std::vector<double> cuts{0.0, kHalfPi};
  if (a > 0.0) {
    for (double b : sigma_.breakpoints()) {
      if (b < a) cuts.push_back(std::asin(b / a));
    }
    const double scale = sigma_.input_scale();
    for (double t = scale / 16.0; t < a; t *= 2.0) cuts.push_back(std::asin(t / a));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  double err = 0.0;
  bool ok = true;
  SimpsonOptions opt;
  opt.min_depth = 3;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    opt.abs_tol = options_.abs_tol * (hi - lo) / kHalfPi;
    auto piece = [&](double v) { return kernel(v, lo, hi); };
    const QuadratureResult q = adaptive_simpson(piece, lo, hi, opt);
    total += q.value;
    err += q.error_estimate;
    ok = ok && q.converged;
  }
  if (!ok && err > options_.abs_tol) {
    throw NumericError(std::string(what) + ": quadrature did not converge at xi = " +
                           std::to_string(xi) + ", achieved " + std::to_string(err),
                       err);
  }
  return kTwoOverPi * total;
}

double ModifiedSaturation::exact_value(double xi) const {
  if (xi == 0.0) return 0.0;
  auto kernel = [&](double v, double, double) {
    const double s = std::sin(v);
    return s * sigma_.value(xi * s);
  };
  return integrate_kernel(kernel, xi, "S");
}

double ModifiedSaturation::exact_derivative(double xi) const {
  const double a = std::fabs(xi);
  auto kernel = [&](double v, double lo, double hi) {
    const double s = std::sin(v);
    // sigma' may jump at the piece ends; sample it strictly inside the piece.
    const double u_lo = std::nextafter(a * std::sin(lo), kInf);
    const double u_hi = std::nextafter(a * std::sin(hi), 0.0);
    const double u = u_lo < u_hi ? std::clamp(a * s, u_lo, u_hi) : a * s;
    return sigma_.derivative(u) * s * s;
  };
  return integrate_kernel(kernel, xi, "S'");
}

double ModifiedSaturation::exact_derivative_alt(double xi) const {
  if (xi == 0.0) throw DomainError("mod_sat_prime_alt: xi must be non-zero");
  const double top = sigma_.value(xi);
  auto kernel = [&](double v, double, double) {
    const double s = std::sin(v);
    const double gap = one_minus_sin(v);
    double quotient;
    if (gap < 1e-9) {
      // Removable singularity at v = pi/2: the divided difference tends to sigma'.
      quotient = sigma_.derivative(xi * (1.0 - 0.5 * gap));
    } else {
      quotient = (top - sigma_.value(xi * s)) / (xi * gap);
    }
    return quotient * h_weight(v);
  };
  return integrate_kernel(kernel, xi, "S' (divided difference form)");
}

void ModifiedSaturation::build_table() {
  const double radius = options_.table_radius;
  // S'' decays like 1/xi^2, so the base spacing grows linearly past a few
  // input scales; refinement below still enforces cell_tol everywhere.
  const double knee = 4.0 * sigma_.input_scale();
  std::vector<double> base{0.0};
  while (base.back() < radius) {
    const double x = base.back();
    const double next = x + options_.max_spacing * std::fmax(1.0, x / knee);
    base.push_back(next > radius * (1.0 - 1e-12) ? radius : next);
  }
  const std::size_t base_cells = base.size() - 1;

  struct Node {
    double x, y, d;
    bool exact_slope = false;  // applies to the cell starting here
  };
  auto make = [&](double x) { return Node{x, exact_value(x), exact_derivative(x)}; };

  const double min_width = 1e-6 * sigma_.input_scale();
  std::vector<Node> out;
  out.reserve(base_cells + base_cells / 8 + 2);
  // Recursive midpoint refinement of one cell; appends everything but `right`.
  auto refine = [&](auto&& self, const Node& left, const Node& right, int depth) -> void {
    const double w = right.x - left.x;
    const double mid_x = left.x + 0.5 * w;
    const Node mid = make(mid_x);
    const double value_err = std::fabs(hermite_value(0.5, w, left.y, right.y, left.d, right.d) - mid.y);
    // The cubic's slope error vanishes at the midpoint to leading order, so
    // probe it at the quarter point.
    const double slope_err = std::fabs(hermite_slope(0.25, w, left.y, right.y, left.d, right.d) -
                                       exact_derivative(left.x + 0.25 * w));
    if (value_err <= options_.cell_tol && slope_err <= options_.slope_tol) {
      out.push_back(left);
      return;
    }
    // S' has a square-root cusp where xi meets a kink of sigma; no cubic cell
    // resolves it, so tiny cells there read the slope from quadrature.
    if (value_err <= options_.cell_tol && w <= min_width) {
      out.push_back(left);
      out.back().exact_slope = true;
      return;
    }
    if (depth >= options_.max_refinement) {
      throw NumericError("ModifiedSaturation: table refinement limit reached near xi = " +
                             std::to_string(mid_x),
                         std::fmax(value_err, slope_err));
    }
    self(self, left, mid, depth + 1);
    self(self, mid, right, depth + 1);
  };

  Node left = make(0.0);
  left.y = 0.0;
  left.d = s_prime_0_;
  for (std::size_t i = 1; i <= base_cells; ++i) {
    const Node right = make(base[i]);
    refine(refine, left, right, 0);
    left = right;
  }
  out.push_back(left);

  const std::size_t n = out.size();
  nodes_.resize(n);
  values_.resize(n);
  slopes_.resize(n);
  cumulative_.assign(n, 0.0);
  exact_slope_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    exact_slope_[i] = out[i].exact_slope;
    nodes_[i] = out[i].x;
    values_[i] = out[i].y;
    slopes_[i] = out[i].d;
    if (i > 0) {
      const double w = nodes_[i] - nodes_[i - 1];
      cumulative_[i] = cumulative_[i - 1] + w * (values_[i - 1] + values_[i]) / 2.0 +
                       w * w * (slopes_[i - 1] - slopes_[i]) / 12.0;
    }
  }
}

std::size_t ModifiedSaturation::cell(double r) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
  std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
  i = (i == 0) ? 0 : i - 1;
  return std::min(i, nodes_.size() - 2);
}

double ModifiedSaturation::value(double xi) const {
  const double a = std::fabs(xi);
  double v;
  if (a > nodes_.back()) {
    v = exact_value(a);
  } else {
    const std::size_t i = cell(a);
    const double w = nodes_[i + 1] - nodes_[i];
    v = hermite_value((a - nodes_[i]) / w, w, values_[i], values_[i + 1], slopes_[i],
                      slopes_[i + 1]);
  }
  return xi < 0.0 ? -v : v;
}

double ModifiedSaturation::derivative(double xi) const {
  const double a = std::fabs(xi);
  if (a > nodes_.back()) return exact_derivative(a);
  const std::size_t i = cell(a);
  if (exact_slope_[i]) return exact_derivative(a);
  const double w = nodes_[i + 1] - nodes_[i];
  return hermite_slope((a - nodes_[i]) / w, w, values_[i], values_[i + 1], slopes_[i],
                       slopes_[i + 1]);
}

double ModifiedSaturation::ratio(double xi) const {
  const double a = std::fabs(xi);
  if (a < 1e-12) return s_prime_0_;
  return value(a) / a;
}

double ModifiedSaturation::antiderivative(double r) const {
  const double a = std::fabs(r);
  const double radius = nodes_.back();
  if (a <= radius) {
    const std::size_t i = cell(a);
    const double len = a - nodes_[i];
    // Simpson is exact on the cubic piece.
    return cumulative_[i] + len / 6.0 * (values_[i] + 4.0 * value(nodes_[i] + 0.5 * len) + value(a));
  }
  double total = cumulative_.back();
  SimpsonOptions opt;
  opt.abs_tol = options_.abs_tol;
  opt.min_depth = 2;
  auto s_of = [this](double x) { return exact_value(x); };
  for (double lo = radius; lo < a; lo *= 2.0) {
    const double hi = std::min(2.0 * lo, a);
    total += adaptive_simpson(s_of, lo, hi, opt).value;
  }
  return total;
}

double mod_sat_eval(const ModifiedSaturation& s, double xi) { return s.exact_value(xi); }
double mod_sat_prime(const ModifiedSaturation& s, double xi) { return s.exact_derivative(xi); }
double mod_sat_prime_alt(const ModifiedSaturation& s, double xi) {
  return s.exact_derivative_alt(xi);
}
double mod_sat_antideriv(const ModifiedSaturation& s, double r) {
  if (!(r >= 0.0)) throw DomainError("mod_sat_antideriv: r must be non-negative");
  return s.antiderivative(r);
}

ScalingBoundReport check_scaling_bound(const ModifiedSaturation& s, std::span<const double> xi_grid,
                                       std::span<const double> m_grid) {
  for (double m : m_grid) {
    if (!(m >= 1.0)) throw DomainError("check_scaling_bound: M values must be >= 1");
  }
  for (double xi : xi_grid) {
    if (!(xi > 0.0) || !std::isfinite(xi)) {
      throw DomainError("check_scaling_bound: xi values must be finite and positive");
    }
  }
  ScalingBoundReport rep;
  rep.c2 = std::numeric_limits<double>::infinity();
  std::vector<double> base(xi_grid.size());
  for (std::size_t i = 0; i < xi_grid.size(); ++i) base[i] = s.exact_derivative(xi_grid[i]);
  for (double m : m_grid) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
      const double r = m * m * m * s.exact_derivative(m * xi_grid[i]) / base[i];
      if (r < row_min) row_min = r;
      if (r < rep.c2) {
        rep.c2 = r;
        rep.argmin_xi = xi_grid[i];
        rep.argmin_m = m;
      }
    }
    rep.m_values.push_back(m);
    rep.min_ratio_per_m.push_back(row_min);
  }
  rep.pass = std::isfinite(rep.c2) && rep.c2 > 0.0;
  return rep;
}

SaturationProbe make_probe(const ModifiedSaturation& s) {
  SaturationProbe p;
  p.name = "S[" + s.sigma().name() + "]";
  p.value = [&s](double x) { return s.value(x); };
  p.derivative = [&s](double x) { return s.derivative(x); };
  p.antiderivative = [&s](double x) { return s.antiderivative(x); };
  p.sigma_inf = s.s_inf();
  p.sigma_prime_0 = s.s_prime_0();
  return p;
}

}  // namespace cdistab
