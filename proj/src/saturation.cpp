#include "cdistab/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cdistab/errors.hpp"

namespace cdistab {

std::string to_string(SaturationKind kind) {
  switch (kind) {
    case SaturationKind::Standard: return "standard";
    case SaturationKind::Tanh: return "tanh";
    case SaturationKind::Arctan: return "arctan";
    case SaturationKind::Custom: return "custom";
  }
  return "unknown";
}

SaturationKind saturation_kind_from_string(const std::string& name) {
  if (name == "standard") return SaturationKind::Standard;
  if (name == "tanh") return SaturationKind::Tanh;
  if (name == "arctan") return SaturationKind::Arctan;
  if (name == "custom") return SaturationKind::Custom;
  throw UsageError("unknown saturation kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// MonotoneCubic

namespace {

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double edge_slope(double h0, double h1, double s0, double s1) {
  double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
  if (sign_of(d) != sign_of(s0)) {
    d = 0.0;
  } else if (sign_of(s0) != sign_of(s1) && std::fabs(d) > 3.0 * std::fabs(s0)) {
    d = 3.0 * s0;
  }
  return d;
}

double hermite(double t, double h, double y0, double y1, double d0, double d1) {
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

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw UsageError("MonotoneCubic: need at least two (x, y) pairs of equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x_[i]) || !std::isfinite(y_[i])) {
      throw InvalidFunctionError("MonotoneCubic: non-finite table entry");
    }
    if (i > 0 && !(x_[i] > x_[i - 1])) {
      throw UsageError("MonotoneCubic: x must be strictly increasing");
    }
  }
  std::vector<double> h(n - 1), s(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    s[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = s[0];
  } else {
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (s[k - 1] * s[k] <= 0.0) {
        d_[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
      }
    }
    d_[0] = edge_slope(h[0], h[1], s[0], s[1]);
    d_[n - 1] = edge_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  }
  cumulative_.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    cumulative_[i + 1] = cumulative_[i] + h[i] * (y_[i] + y_[i + 1]) / 2.0 +
                         h[i] * h[i] * (d_[i] - d_[i + 1]) / 12.0;
  }
  integral_at_zero_ = integral_from_left(0.0);
}

std::size_t MonotoneCubic::cell(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  i = (i == 0) ? 0 : i - 1;
  return std::min(i, x_.size() - 2);
}

double MonotoneCubic::value(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const std::size_t i = cell(x);
  const double h = x_[i + 1] - x_[i];
  return hermite((x - x_[i]) / h, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

double MonotoneCubic::derivative(double x) const {
  if (x < x_.front() || x >= x_.back()) return 0.0;
  const std::size_t i = cell(x);
  const double h = x_[i + 1] - x_[i];
  return hermite_slope((x - x_[i]) / h, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

double MonotoneCubic::integral_from_left(double x) const {
  if (x <= x_.front()) return (x - x_.front()) * y_.front();
  if (x >= x_.back()) return cumulative_.back() + (x - x_.back()) * y_.back();
  const std::size_t i = cell(x);
  const double len = x - x_[i];
  // Simpson is exact on the cubic piece.
  return cumulative_[i] + len / 6.0 * (y_[i] + 4.0 * value(x_[i] + 0.5 * len) + value(x));
}

double MonotoneCubic::integral(double x) const { return integral_from_left(x) - integral_at_zero_; }

// ---------------------------------------------------------------------------
// SaturationFn

SaturationFn SaturationFn::standard() { return SaturationFn(SaturationKind::Standard, nullptr); }
SaturationFn SaturationFn::tanh() { return SaturationFn(SaturationKind::Tanh, nullptr); }
SaturationFn SaturationFn::arctan() { return SaturationFn(SaturationKind::Arctan, nullptr); }

SaturationFn SaturationFn::from_table(std::vector<double> xi, std::vector<double> sigma) {
  if (xi.empty()) throw UsageError("from_table: empty table");
  const bool odd = xi.front() == 0.0;
  if (odd && sigma.front() != 0.0) {
    throw InvalidFunctionError("from_table: a table starting at xi = 0 must have sigma(0) = 0");
  }
  SaturationFn f(SaturationKind::Custom,
                 std::make_shared<const MonotoneCubic>(std::move(xi), std::move(sigma)));
  f.odd_extension_ = odd;
  return f;
}

SaturationFn SaturationFn::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open saturation table '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw UsageError("saturation table is empty");
  auto parse_row = [](const std::string& row, double& a, double& b) {
    const auto comma = row.find(',');
    if (comma == std::string::npos) return false;
    try {
      std::size_t used = 0;
      a = std::stod(row.substr(0, comma), &used);
      b = std::stod(row.substr(comma + 1), &used);
    } catch (const std::exception&) {
      return false;
    }
    return true;
  };
  double a = 0, b = 0;
  if (parse_row(line, a, b)) throw UsageError("saturation table: header row required");
  std::vector<double> xi, sigma;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, a, b)) {
      throw UsageError("saturation table: malformed row " + std::to_string(lineno));
    }
    xi.push_back(a);
    sigma.push_back(b);
  }
  return from_table(std::move(xi), std::move(sigma));
}

SaturationFn SaturationFn::scaled(double a, double c) const {
  if (!(a > 0.0) || !(c > 0.0)) throw DomainError("SaturationFn::scaled: factors must be positive");
  SaturationFn out = *this;
  out.k1_ = k1_ * a;
  out.k2_ = k2_ * c;
  return out;
}

SaturationFn SaturationFn::normalized() const {
  const double inf = sigma_inf();
  return scaled(inf / sigma_prime_0(), inf);
}

double SaturationFn::base_value(double u) const {
  switch (kind_) {
    case SaturationKind::Standard: return u / std::max(1.0, std::fabs(u));
    case SaturationKind::Tanh: return std::tanh(u);
    case SaturationKind::Arctan: return std::atan(u);
    case SaturationKind::Custom:
      if (odd_extension_) return u >= 0.0 ? table_->value(u) : -table_->value(-u);
      return table_->value(u);
  }
  return 0.0;
}

double SaturationFn::base_derivative(double u) const {
  switch (kind_) {
    case SaturationKind::Standard: return std::fabs(u) < 1.0 ? 1.0 : 0.0;
    case SaturationKind::Tanh: {
      const double t = std::tanh(u);
      return 1.0 - t * t;
    }
    case SaturationKind::Arctan: return 1.0 / (1.0 + u * u);
    case SaturationKind::Custom:
      if (odd_extension_) return table_->derivative(std::fabs(u));
      return table_->derivative(u);
  }
  return 0.0;
}

double SaturationFn::base_antiderivative(double u) const {
  const double a = std::fabs(u);
  switch (kind_) {
    case SaturationKind::Standard: return a <= 1.0 ? 0.5 * u * u : a - 0.5;
    case SaturationKind::Tanh:
      // log cosh, written to stay finite for large |u|
      return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    case SaturationKind::Arctan: return a * std::atan(a) - 0.5 * std::log1p(a * a);
    case SaturationKind::Custom:
      if (odd_extension_) return table_->integral(a);
      return table_->integral(u);
  }
  return 0.0;
}

double SaturationFn::base_inf() const {
  switch (kind_) {
    case SaturationKind::Standard:
    case SaturationKind::Tanh: return 1.0;
    case SaturationKind::Arctan: return std::numbers::pi / 2.0;
    case SaturationKind::Custom: return table_->values().back();
  }
  return 1.0;
}

double SaturationFn::base_prime_0() const {
  if (kind_ == SaturationKind::Custom) return table_->derivative(0.0);
  return 1.0;
}

double SaturationFn::value(double xi) const { return base_value(k1_ * xi) / k2_; }
double SaturationFn::derivative(double xi) const { return k1_ * base_derivative(k1_ * xi) / k2_; }
double SaturationFn::antiderivative(double xi) const {
  return base_antiderivative(k1_ * xi) / (k1_ * k2_);
}
double SaturationFn::sigma_inf() const { return base_inf() / k2_; }
double SaturationFn::sigma_prime_0() const { return k1_ * base_prime_0() / k2_; }

std::vector<double> SaturationFn::breakpoints() const {
  std::vector<double> out;
  if (kind_ == SaturationKind::Standard) {
    out.push_back(1.0 / k1_);
  } else if (kind_ == SaturationKind::Custom) {
    for (double end : {table_->nodes().front(), table_->nodes().back()}) {
      if (end != 0.0) out.push_back(std::fabs(end) / k1_);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

SaturationProbe make_probe(const SaturationFn& f) {
  SaturationProbe p;
  p.name = f.name();
  p.value = [f](double x) { return f.value(x); };
  p.derivative = [f](double x) { return f.derivative(x); };
  p.antiderivative = [f](double x) { return f.antiderivative(x); };
  p.sigma_inf = f.sigma_inf();
  p.sigma_prime_0 = f.sigma_prime_0();
  return p;
}

bool ValidationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.pass; });
}

const AxiomCheck* ValidationReport::find(const std::string& item) const {
  for (const auto& c : checks) {
    if (c.item == item) return &c;
  }
  return nullptr;
}

bool ValidationReport::group_pass(const std::string& prefix) const {
  for (const auto& c : checks) {
    if (c.item.rfind(prefix, 0) == 0 && !c.pass) return false;
  }
  return true;
}

ValidationReport validate_saturation(const SaturationProbe& probe, const GridSpec& grid) {
  if (!(grid.half_width > 0.0) || grid.points < 3) {
    throw UsageError("validate_saturation: grid needs positive width and at least 3 points");
  }
  const int m = (grid.points - 1 + 1) / 2;  // positive-side intervals, rounds up
  const double width = grid.half_width;
  std::vector<double> xs(m + 1), val(m + 1), der(m + 1), neg(m + 1);
  for (int i = 0; i <= m; ++i) {
    xs[i] = width * static_cast<double>(i) / static_cast<double>(m);
    val[i] = probe.value(xs[i]);
    neg[i] = probe.value(-xs[i]);
    der[i] = probe.derivative(xs[i]);
    if (!std::isfinite(val[i]) || !std::isfinite(neg[i]) || !std::isfinite(der[i])) {
      throw InvalidFunctionError("validate_saturation: non-finite value of " + probe.name +
                                 " at xi = " + std::to_string(xs[i]));
    }
  }
  const double inf = probe.sigma_inf;
  const double p0 = probe.sigma_prime_0;
  const double scale = std::max(1.0, inf);

  ValidationReport rep;
  rep.function = probe.name;
  auto add = [&rep](std::string item, bool pass, double measured) {
    rep.checks.push_back({std::move(item), pass, measured});
  };

  // (s1) oddness and a finite Lipschitz ratio over the full symmetric grid.
  double odd_res = 0.0;
  for (int i = 0; i <= m; ++i) odd_res = std::max(odd_res, std::fabs(val[i] + neg[i]));
  add("s1.odd", odd_res <= 1e-12 * scale, odd_res);
  double lip = 0.0;
  for (int i = 0; i < m; ++i) {
    const double dx = xs[i + 1] - xs[i];
    lip = std::max(lip, std::fabs(val[i + 1] - val[i]) / dx);
    lip = std::max(lip, std::fabs(neg[i + 1] - neg[i]) / dx);
  }
  rep.lipschitz = lip;
  add("s1.lipschitz", std::isfinite(lip), lip);

  // (s2) sign condition and both limits.
  bool sign_ok = inf > 0.0 && p0 > 0.0;
  for (int i = 1; i <= m; ++i) {
    sign_ok = sign_ok && val[i] * xs[i] > 0.0 && neg[i] * (-xs[i]) > 0.0;
  }
  add("s2.sign", sign_ok, sign_ok ? 1.0 : 0.0);
  const double far = probe.value(1e13);
  const double inf_gap = std::fabs(far - inf) / inf;
  add("s2.limit_inf", std::isfinite(far) && inf_gap <= 1e-6, inf_gap);
  const double tiny = 1e-7;
  const double zero_gap = std::fabs(probe.value(tiny) / tiny - p0) / p0;
  add("s2.limit_zero", zero_gap <= 1e-6, zero_gap);

  // (s3) sigma non-decreasing on the whole grid, sigma' non-increasing on R+.
  double worst_drop = 0.0;
  for (int i = 0; i < m; ++i) {
    worst_drop = std::max(worst_drop, val[i] - val[i + 1]);
    worst_drop = std::max(worst_drop, neg[i + 1] - neg[i]);
  }
  add("s3.nondecreasing", worst_drop <= 1e-14 * scale, worst_drop);
  double worst_rise = 0.0;
  for (int i = 0; i < m; ++i) worst_rise = std::max(worst_rise, der[i + 1] - der[i]);
  add("s3.derivative_nonincreasing", worst_rise <= 1e-9 * p0, worst_rise);

  // (c1) Sigma even, positive definite, asymptotically linear with slope sigma_inf.
  double even_res = 0.0;
  bool posdef = probe.antiderivative(0.0) == 0.0;
  for (int i = 1; i <= m; ++i) {
    const double a = probe.antiderivative(xs[i]);
    const double b = probe.antiderivative(-xs[i]);
    even_res = std::max(even_res, std::fabs(a - b));
    posdef = posdef && a > 0.0;
  }
  add("c1.even", even_res <= 1e-10 * std::max(1.0, inf * width), even_res);
  add("c1.positive_definite", posdef, posdef ? 1.0 : 0.0);
  const double big = 1e12;
  const double slope_gap = std::fabs(probe.antiderivative(big) / big - inf) / inf;
  add("c1.linear_growth", slope_gap <= 1e-6, slope_gap);

  // (c2) sigma' <= sigma / xi and sigma / xi non-increasing on R+.
  double bound_excess = 0.0;
  double ratio_rise = 0.0;
  double prev_ratio = p0;
  for (int i = 1; i <= m; ++i) {
    const double ratio = val[i] / xs[i];
    bound_excess = std::max(bound_excess, der[i] - ratio);
    ratio_rise = std::max(ratio_rise, ratio - prev_ratio);
    prev_ratio = ratio;
  }
  add("c2.derivative_bound", bound_excess <= 1e-9 * p0, bound_excess);
  add("c2.ratio_nonincreasing", ratio_rise <= 1e-9 * p0, ratio_rise);

  // (c3) continuity of sigma' at 0 and a neighbourhood where sigma' >= sigma'(0)/2.
  const double cont_gap = std::fabs(probe.derivative(tiny) - p0) / p0;
  add("c3.continuity", cont_gap <= 1e-6, cont_gap);
  double xi0 = width;
  for (int i = 0; i <= m; ++i) {
    if (der[i] < 0.5 * p0) {
      xi0 = xs[i];
      break;
    }
  }
  rep.xi0 = xi0;
  add("c3.xi0", xi0 > 0.0, xi0);
  return rep;
}

}  // namespace cdistab
