#include "cdistab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cdistab/averaging.hpp"
#include "cdistab/errors.hpp"
#include "cdistab/normal_form.hpp"

namespace cdistab {

namespace {

// ---------------------------------------------------------------------------
// Strict JSON reading

class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError(where_ + ": expected an object");
  }

  /// A null value counts as absent, so resolved configs parse back.
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw UsageError(path(key) + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw UsageError(path(key) + ": must be finite");
  }

  void integer(const char* key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw UsageError(path(key) + ": expected an integer");
    out = v.get<int>();
  }

  void text(const char* key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw UsageError(path(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    out = number_list(j_.at(key), path(key));
  }

  template <int N>
  void fixed(const char* key, Eigen::Matrix<double, N, 1>& out) {
    if (!has(key)) return;
    const auto v = number_list(j_.at(key), path(key));
    if (static_cast<int>(v.size()) != N) {
      throw UsageError(path(key) + ": expected " + std::to_string(N) + " numbers");
    }
    for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
  }

  const nlohmann::json* object(const char* key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw UsageError(path(it.key().c_str()) + ": unknown key");
    }
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  static std::vector<double> number_list(const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) throw UsageError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw UsageError(where + ": expected an array of numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back())) throw UsageError(where + ": must be finite");
    }
    return out;
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw UsageError(what + " must be positive");
}

void require_positive(int v, const std::string& what) {
  if (v <= 0) throw UsageError(what + " must be positive");
}

void require_positive(const std::vector<double>& v, const std::string& what) {
  if (v.empty()) throw UsageError(what + " must not be empty");
  for (double x : v) require_positive(x, what);
}

void read_step(const nlohmann::json& j, StepConfig& s) {
  ObjectReader r(j, "simulate.step");
  r.text("mode", s.mode);
  r.number("h", s.h);
  r.number("rtol", s.rtol);
  r.number("atol", s.atol);
  r.number("h_max", s.h_max);
  r.done();
  if (s.mode != "fixed" && s.mode != "adaptive") {
    throw UsageError("simulate.step.mode must be \"fixed\" or \"adaptive\"");
  }
  require_positive(s.h, "simulate.step.h");
  require_positive(s.rtol, "simulate.step.rtol");
  require_positive(s.atol, "simulate.step.atol");
  require_positive(s.h_max, "simulate.step.h_max");
}

void read_simulate(const nlohmann::json& j, SimulateConfig& s) {
  ObjectReader r(j, "simulate");
  r.text("system", s.system);
  r.number("eps", s.eps);
  r.number("omega", s.omega);
  r.fixed<2>("b1", s.b1);
  r.fixed<2>("b2", s.b2);
  if (r.has("gain")) {
    Vec4 g;
    r.fixed<4>("gain", g);
    s.gain = g;
  }
  r.integer("n", s.n);
  if (r.has("x0")) {
    std::vector<double> x;
    r.numbers("x0", x);
    s.x0 = x;
  }
  r.number("x0_radius", s.x0_radius);
  r.number("t_end", s.t_end);
  r.number("sample_dt", s.sample_dt);
  if (const auto* step = r.object("step")) read_step(*step, s.step);
  r.done();
  system_kind_from_string(s.system);
  require_positive(s.eps, "simulate.eps");
  require_positive(s.omega, "simulate.omega");
  require_positive(s.n, "simulate.n");
  require_positive(s.t_end, "simulate.t_end");
  require_positive(s.sample_dt, "simulate.sample_dt");
  if (!(s.x0_radius >= 0.0)) throw UsageError("simulate.x0_radius must be non-negative");
}

void read_verify(const nlohmann::json& j, VerifyConfig& v) {
  ObjectReader r(j, "verify");
  r.text("suite", v.suite);
  r.numbers("eps", v.eps);
  r.number("rho", v.rho);
  r.number("r", v.r);
  r.integer("window_starts", v.window_starts);
  r.numbers("window_radii", v.window_radii);
  r.integer("capture_starts", v.capture_starts);
  r.numbers("capture_radii", v.capture_radii);
  r.number("capture_horizon", v.capture_horizon);
  r.number("capture_max_time", v.capture_max_time);
  r.integer("l2_windows", v.l2_windows);
  r.number("l2_horizon", v.l2_horizon);
  r.number("tail_width", v.tail_width);
  r.integer("t0_starts", v.t0_starts);
  r.numbers("t0_radii", v.t0_radii);
  r.number("t0_t_end", v.t0_t_end);
  r.number("t0_final_norm", v.t0_final_norm);
  r.integer("generalization_starts", v.generalization_starts);
  r.integer("jacobian_points", v.jacobian_points);
  r.number("jacobian_tol", v.jacobian_tol);
  r.integer("spd_points", v.spd_points);
  r.integer("gap_points", v.gap_points);
  r.number("formula_tol", v.formula_tol);
  r.numbers("averaging_eps", v.averaging_eps);
  r.numbers("averaging_radii", v.averaging_radii);
  r.integer("averaging_angles", v.averaging_angles);
  r.numbers("averaging_window", v.averaging_window);
  r.numbers("averaging_spot_window", v.averaging_spot_window);
  r.number("averaging_slope", v.averaging_slope);
  r.number("averaging_ratio", v.averaging_ratio);
  r.numbers("hurwitz_eps", v.hurwitz_eps);
  r.number("hurwitz_tol", v.hurwitz_tol);
  r.numbers("equivalence_eps", v.equivalence_eps);
  r.integer("equivalence_samples", v.equivalence_samples);
  r.number("equivalence_horizon", v.equivalence_horizon);
  r.number("equivalence_tol", v.equivalence_tol);
  r.number("residual_tol", v.residual_tol);
  r.number("identity_tol", v.identity_tol);
  r.done();

  require_positive(v.eps, "verify.eps");
  require_positive(v.rho, "verify.rho");
  require_positive(v.r, "verify.r");
  require_positive(v.window_starts, "verify.window_starts");
  require_positive(v.window_radii, "verify.window_radii");
  require_positive(v.capture_starts, "verify.capture_starts");
  require_positive(v.capture_radii, "verify.capture_radii");
  if (!(v.capture_horizon >= 10.0)) throw UsageError("verify.capture_horizon must be at least 10");
  require_positive(v.capture_max_time, "verify.capture_max_time");
  require_positive(v.l2_windows, "verify.l2_windows");
  if (!(v.l2_horizon >= 10.0)) throw UsageError("verify.l2_horizon must be at least 10");
  require_positive(v.tail_width, "verify.tail_width");
  require_positive(v.t0_starts, "verify.t0_starts");
  require_positive(v.t0_radii, "verify.t0_radii");
  require_positive(v.t0_t_end, "verify.t0_t_end");
  require_positive(v.t0_final_norm, "verify.t0_final_norm");
  require_positive(v.generalization_starts, "verify.generalization_starts");
  require_positive(v.jacobian_points, "verify.jacobian_points");
  require_positive(v.jacobian_tol, "verify.jacobian_tol");
  require_positive(v.spd_points, "verify.spd_points");
  require_positive(v.gap_points, "verify.gap_points");
  require_positive(v.formula_tol, "verify.formula_tol");
  require_positive(v.averaging_eps, "verify.averaging_eps");
  require_positive(v.averaging_radii, "verify.averaging_radii");
  require_positive(v.averaging_angles, "verify.averaging_angles");
  for (const auto* w : {&v.averaging_window, &v.averaging_spot_window}) {
    if (w->size() != 2 || !((*w)[0] >= 0.0) || !((*w)[1] > (*w)[0])) {
      throw UsageError("verify.averaging windows must be [a, c] with 0 <= a < c");
    }
  }
  require_positive(v.averaging_slope, "verify.averaging_slope");
  require_positive(v.averaging_ratio, "verify.averaging_ratio");
  require_positive(v.hurwitz_eps, "verify.hurwitz_eps");
  require_positive(v.hurwitz_tol, "verify.hurwitz_tol");
  require_positive(v.equivalence_eps, "verify.equivalence_eps");
  require_positive(v.equivalence_samples, "verify.equivalence_samples");
  require_positive(v.equivalence_horizon, "verify.equivalence_horizon");
  require_positive(v.equivalence_tol, "verify.equivalence_tol");
  require_positive(v.residual_tol, "verify.residual_tol");
  require_positive(v.identity_tol, "verify.identity_tol");
}

void read_sweep(const nlohmann::json& j, SweepConfig& s) {
  ObjectReader r(j, "sweep");
  r.numbers("eps", s.eps);
  r.numbers("rho", s.rho);
  r.numbers("r", s.r);
  r.integer("starts", s.starts);
  r.numbers("radii", s.radii);
  r.done();
  require_positive(s.eps, "sweep.eps");
  require_positive(s.rho, "sweep.rho");
  require_positive(s.r, "sweep.r");
  require_positive(s.starts, "sweep.starts");
  require_positive(s.radii, "sweep.radii");
}

Json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string tag(const std::string& base, double eps) { return base + ".eps=" + format_number(eps); }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

Vec2 random_planar(std::mt19937_64& rng, double lo, double hi) {
  const double r = log_uniform(rng, lo, hi);
  const double th = uniform(rng, 0.0, kTwoPi);
  return Vec2(r * std::cos(th), r * std::sin(th));
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  return g;
}

// Smooth stand-in for residual checks: a kinked sigma puts jumps into the
// second derivative that finite differences cannot resolve.
SaturationFn smooth_for_residuals(const SaturationFn& sigma) {
  return sigma.breakpoints().empty() ? sigma : SaturationFn::tanh();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

StepControl StepConfig::control() const {
  return mode == "adaptive" ? StepControl::adaptive(rtol, atol, h_max) : StepControl::fixed(h);
}

RunConfig parse_config(const nlohmann::json& doc) {
  RunConfig c;
  ObjectReader r(doc, "config");
  if (r.has("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw UsageError("config.seed: expected a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (r.has("sigma")) {
    const auto& s = doc.at("sigma");
    if (s.is_string()) {
      c.sigma = s.get<std::string>();
    } else {
      ObjectReader sr(s, "config.sigma");
      std::string csv;
      sr.text("csv", csv);
      sr.done();
      if (csv.empty()) throw UsageError("config.sigma: expected a name or {\"csv\": path}");
      c.sigma = csv;
    }
  }
  int workers = static_cast<int>(c.workers);
  r.integer("workers", workers);
  require_positive(workers, "config.workers");
  c.workers = static_cast<unsigned>(workers);
  r.text("out", c.out);
  if (const auto* s = r.object("simulate")) read_simulate(*s, c.simulate);
  if (const auto* v = r.object("verify")) read_verify(*v, c.verify);
  if (const auto* s = r.object("sweep")) read_sweep(*s, c.sweep);
  r.done();
  make_sigma(c.sigma);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["sigma"] = c.sigma;
  j["workers"] = c.workers;
  j["out"] = c.out;

  const auto& s = c.simulate;
  Json sim;
  sim["system"] = s.system;
  sim["eps"] = s.eps;
  sim["omega"] = s.omega;
  sim["b1"] = vec_json(s.b1);
  sim["b2"] = vec_json(s.b2);
  sim["gain"] = s.gain ? vec_json(*s.gain) : Json(nullptr);
  sim["n"] = s.n;
  sim["x0"] = s.x0 ? Json(*s.x0) : Json(nullptr);
  sim["x0_radius"] = s.x0_radius;
  sim["t_end"] = s.t_end;
  sim["sample_dt"] = s.sample_dt;
  sim["step"] = Json{{"mode", s.step.mode}, {"h", s.step.h},         {"rtol", s.step.rtol},
                     {"atol", s.step.atol}, {"h_max", s.step.h_max}};
  j["simulate"] = sim;

  const auto& v = c.verify;
  Json ver;
  ver["suite"] = v.suite;
  ver["eps"] = v.eps;
  ver["rho"] = v.rho;
  ver["r"] = v.r;
  ver["window_starts"] = v.window_starts;
  ver["window_radii"] = v.window_radii;
  ver["capture_starts"] = v.capture_starts;
  ver["capture_radii"] = v.capture_radii;
  ver["capture_horizon"] = v.capture_horizon;
  ver["capture_max_time"] = v.capture_max_time;
  ver["l2_windows"] = v.l2_windows;
  ver["l2_horizon"] = v.l2_horizon;
  ver["tail_width"] = v.tail_width;
  ver["t0_starts"] = v.t0_starts;
  ver["t0_radii"] = v.t0_radii;
  ver["t0_t_end"] = v.t0_t_end;
  ver["t0_final_norm"] = v.t0_final_norm;
  ver["generalization_starts"] = v.generalization_starts;
  ver["jacobian_points"] = v.jacobian_points;
  ver["jacobian_tol"] = v.jacobian_tol;
  ver["spd_points"] = v.spd_points;
  ver["gap_points"] = v.gap_points;
  ver["formula_tol"] = v.formula_tol;
  ver["averaging_eps"] = v.averaging_eps;
  ver["averaging_radii"] = v.averaging_radii;
  ver["averaging_angles"] = v.averaging_angles;
  ver["averaging_window"] = v.averaging_window;
  ver["averaging_spot_window"] = v.averaging_spot_window;
  ver["averaging_slope"] = v.averaging_slope;
  ver["averaging_ratio"] = v.averaging_ratio;
  ver["hurwitz_eps"] = v.hurwitz_eps;
  ver["hurwitz_tol"] = v.hurwitz_tol;
  ver["equivalence_eps"] = v.equivalence_eps;
  ver["equivalence_samples"] = v.equivalence_samples;
  ver["equivalence_horizon"] = v.equivalence_horizon;
  ver["equivalence_tol"] = v.equivalence_tol;
  ver["residual_tol"] = v.residual_tol;
  ver["identity_tol"] = v.identity_tol;
  j["verify"] = ver;

  const auto& w = c.sweep;
  j["sweep"] = Json{{"eps", w.eps},       {"rho", w.rho},     {"r", w.r},
                    {"starts", w.starts}, {"radii", w.radii}};
  return j;
}

std::string config_hash(const RunConfig& config) {
  // Where results go and how many threads make them do not change them.
  Json j = to_json(config);
  j.erase("out");
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

SaturationFn make_sigma(const std::string& name) {
  if (name == "standard" || name == "tanh" || name == "arctan") {
    switch (saturation_kind_from_string(name)) {
      case SaturationKind::Tanh:
        return SaturationFn::tanh();
      case SaturationKind::Arctan:
        return SaturationFn::arctan();
      default:
        return SaturationFn::standard();
    }
  }
  if (!std::filesystem::exists(name)) {
    throw UsageError("sigma: \"" + name + "\" is neither a built-in nor an existing CSV file");
  }
  return SaturationFn::load_csv(name);
}

// ---------------------------------------------------------------------------
// Records

Json CheckRecord::to_json() const {
  Json j;
  j["name"] = name;
  j["pass"] = pass;
  j["mandatory"] = mandatory;
  j["measured"] = measured;
  return j;
}

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckRecord& c) { return c.pass || !c.mandatory; });
}

const CheckRecord* SuiteResult::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void SuiteResult::append(const SuiteResult& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  for (auto it = other.constants.begin(); it != other.constants.end(); ++it) {
    constants[it.key()] = it.value();
  }
}

Json SuiteResult::to_json() const {
  Json j;
  j["suite"] = suite;
  j["pass"] = pass();
  Json arr = Json::array();
  for (const auto& c : checks) arr.push_back(c.to_json());
  j["checks"] = arr;
  j["constants"] = constants;
  return j;
}

VerifyContext::VerifyContext(RunConfig config)
    : config_(std::move(config)),
      sigma_(make_sigma(config_.sigma)),
      s_(std::make_shared<const ModifiedSaturation>(sigma_)),
      lyap_(s_) {}

std::mt19937_64 VerifyContext::rng(std::uint64_t salt) const {
  if (!config_.seed) throw UsageError("this run samples initial conditions: a seed is required");
  const std::uint64_t s = *config_.seed;
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Samplers

Eigen::VectorXd sphere_point(std::mt19937_64& rng, int dim, double r) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = n01(rng);
  } while (v.norm() < 1e-12);
  return r * v.normalized();
}

std::vector<Vec4> sample_starts(const LyapunovContext& ctx, std::mt19937_64& rng,
                                const std::vector<double>& radii, int count, double lo, double hi,
                                const std::vector<double>& adversarial) {
  if (radii.empty()) throw UsageError("sample_starts: no radii");
  std::vector<Vec4> out;
  for (double a : adversarial) {
    if (static_cast<int>(out.size()) >= count) break;
    Vec4 x;
    x << a, 0.0, a, 0.0;
    const double v = v0(ctx, x);
    if (v >= lo && v <= hi) out.push_back(x);
  }
  std::size_t k = 0;
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    const Vec4 x = sphere_point(rng, 4, radii[k % radii.size()]);
    ++k;
    const double v = v0(ctx, x);
    if (v >= lo && v <= hi) {
      out.push_back(x);
    } else if (++attempts > 1000L * count) {
      throw UsageError("sample_starts: radii never produce V0 in the requested band");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saturation and modified saturation

CheckRecord check_axioms(const SaturationFn& sigma) {
  const ValidationReport rep = validate_saturation(sigma);
  CheckRecord c{"axioms." + sigma.name(), rep.pass(), true, Json::object()};
  Json items = Json::object();
  Json failed = Json::array();
  for (const auto& a : rep.checks) {
    items[a.item] = a.measured;
    if (!a.pass) failed.push_back(a.item);
  }
  c.measured["items"] = items;
  c.measured["failed"] = failed;
  c.measured["xi0"] = rep.xi0;
  c.measured["lipschitz"] = rep.lipschitz;
  return c;
}

CheckRecord check_mod_sat_axioms(const ModifiedSaturation& s) {
  const ValidationReport rep = validate_saturation(make_probe(s));
  CheckRecord c{"mod_sat_axioms." + s.sigma().name(), rep.pass(), true, Json::object()};
  Json items = Json::object();
  Json failed = Json::array();
  for (const auto& a : rep.checks) {
    items[a.item] = a.measured;
    if (!a.pass) failed.push_back(a.item);
  }
  c.measured["items"] = items;
  c.measured["failed"] = failed;
  c.measured["xi0"] = rep.xi0;
  return c;
}

CheckRecord check_slope_at_zero(const ModifiedSaturation& s, double tol) {
  const double expected = s.sigma().sigma_prime_0() / 2.0;
  const double measured = s.derivative(0.0);
  const double gap = std::fabs(measured - expected);
  CheckRecord c{"mod_sat.slope_at_zero", gap <= tol, true, Json::object()};
  c.measured = Json{{"s_prime_0", measured}, {"expected", expected}, {"gap", gap}, {"tol", tol}};
  return c;
}

CheckRecord check_formula_agreement(const ModifiedSaturation& s, double tol) {
  double worst = 0.0, at = 0.0, table_worst = 0.0;
  for (double xi : log_grid(1e-2, 1e2, 401)) {
    for (double x : {xi, -xi}) {
      const double d1 = s.exact_derivative(x);
      const double gap = std::fabs(d1 - s.exact_derivative_alt(x));
      if (gap > worst) {
        worst = gap;
        at = x;
      }
      table_worst = std::max(table_worst, std::fabs(s.derivative(x) - d1));
    }
  }
  CheckRecord c{"mod_sat.formula_agreement", worst <= tol, true, Json::object()};
  c.measured = Json{{"max_gap", worst}, {"at", at}, {"table_vs_direct", table_worst}, {"tol", tol}};
  return c;
}

CheckRecord report_s_inf(const ModifiedSaturation& s) {
  const double sigma_inf = s.sigma().sigma_inf();
  const double expected = 2.0 * sigma_inf / std::numbers::pi;
  const double gap = std::fabs(s.s_inf() - expected);
  CheckRecord c{"mod_sat.s_inf", gap <= 1e-6 * sigma_inf, false, Json::object()};
  c.measured = Json{{"measured", s.s_inf()},
                    {"two_over_pi_sigma_inf", expected},
                    {"half_sigma_inf", sigma_inf / 2.0},
                    {"gap", gap}};
  return c;
}

CheckRecord check_scaling(const ModifiedSaturation& s) {
  const auto xi = log_grid(1e-2, 1e2, 201);
  const std::vector<double> m{1.0, 2.0, 4.0, 8.0, 16.0};
  const ScalingBoundReport rep = check_scaling_bound(s, xi, m);
  CheckRecord c{"mod_sat.scaling_bound." + s.sigma().name(), rep.pass, true, Json::object()};
  c.measured = Json{{"c2", rep.c2},
                    {"argmin_xi", rep.argmin_xi},
                    {"argmin_m", rep.argmin_m},
                    {"min_ratio_per_m", rep.min_ratio_per_m}};
  return c;
}

CheckRecord check_jacobian(const ModifiedSaturation& s, std::mt19937_64& rng, int fd_points,
                           double tol, int spd_points) {
  double worst_fd = 0.0;
  for (int i = 0; i < fd_points; ++i) {
    const Vec2 z = random_planar(rng, 1e-2, 1e2);
    const Mat2 j = averaged_field_jacobian(s, z);
    const double h = 1e-6 * std::max(1.0, z.norm());
    Mat2 fd;
    for (int k = 0; k < 2; ++k) {
      Vec2 dz = Vec2::Zero();
      dz(k) = h;
      fd.col(k) = (averaged_field(s, Vec2(z + dz)) - averaged_field(s, Vec2(z - dz))) / (2.0 * h);
    }
    worst_fd = std::max(worst_fd, (fd - j).norm() / j.norm());
  }
  double worst_asym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spd_points; ++i) {
    const Mat2 j = averaged_field_jacobian(s, random_planar(rng, 1e-3, 1e3));
    worst_asym = std::max(worst_asym, (j - j.transpose()).norm());
    const double tr = j.trace() / 2.0;
    const double off = std::hypot((j(0, 0) - j(1, 1)) / 2.0, j(0, 1));
    min_eig = std::min(min_eig, tr - off);
  }
  const bool pass = worst_fd <= tol && worst_asym <= 1e-12 && min_eig > 0.0;
  CheckRecord c{"jacobian", pass, true, Json::object()};
  c.measured = Json{{"fd_points", fd_points},
                    {"max_rel_error", worst_fd},
                    {"tol", tol},
                    {"spd_points", spd_points},
                    {"max_asymmetry", worst_asym},
                    {"min_eigenvalue", min_eig}};
  return c;
}

CheckRecord check_monotonicity(const ModifiedSaturation& s, std::mt19937_64& rng, int points) {
  double min_scaled = std::numeric_limits<double>::infinity();
  int failures = 0;
  for (int i = 0; i < points; ++i) {
    const Vec2 z = random_planar(rng, 1e-3, 1e3);
    const Vec2 y = random_planar(rng, 1e-3, 1e3);
    const double gap = monotonicity_gap(s, z, y);
    if (!(gap > 0.0)) ++failures;
    min_scaled = std::min(min_scaled, gap / y.squaredNorm());
  }
  CheckRecord c{"monotonicity_gap", failures == 0, true, Json::object()};
  c.measured = Json{{"points", points}, {"failures", failures}, {"min_gap_over_y2", min_scaled}};
  return c;
}

// ---------------------------------------------------------------------------
// Decrease of V0 along T0, Fn and DI

CheckRecord check_decrease(const LyapunovContext& ctx, const SystemSpec& spec, std::mt19937_64& rng,
                           int starts, const std::vector<double>& radii, double t_end,
                           double final_norm) {
  int decrease_failures = 0, converged = 0;
  double worst_final = 0.0;
  double largest_converged = 0.0;
  double smallest_unconverged = std::numeric_limits<double>::infinity();
  for (int i = 0; i < starts; ++i) {
    const double r = radii[static_cast<std::size_t>(i) % radii.size()];
    const Eigen::VectorXd x0 = sphere_point(rng, spec.dimension(), r);
    const DecreaseReport rep = decrease_check(ctx, spec, x0, t_end, final_norm * 1e-2);
    if (!rep.pass) ++decrease_failures;
    worst_final = std::max(worst_final, rep.final_norm);
    if (rep.final_norm < final_norm) {
      ++converged;
      largest_converged = std::max(largest_converged, r);
    } else {
      smallest_unconverged = std::min(smallest_unconverged, r);
    }
  }
  std::string name = "decrease." + to_string(spec.kind);
  if (spec.kind == SystemKind::Fn) name += ".n=" + std::to_string(spec.n);
  CheckRecord c{name, decrease_failures == 0 && converged == starts, true, Json::object()};
  c.measured = Json{{"starts", starts},
                    {"decrease_failures", decrease_failures},
                    {"converged", converged},
                    {"t_end", t_end},
                    {"final_norm_target", final_norm},
                    {"worst_final_norm", worst_final},
                    {"largest_converged_radius", largest_converged},
                    {"smallest_unconverged_radius",
                     std::isfinite(smallest_unconverged) ? Json(smallest_unconverged)
                                                         : Json(nullptr)}};
  return c;
}

// ---------------------------------------------------------------------------
// Averaging

std::vector<CheckRecord> check_averaging(const SaturationFn& sigma, const ModifiedSaturation& s,
                                         const std::vector<double>& radii, int angles,
                                         const std::vector<double>& eps, double a, double c,
                                         double min_slope, double max_ratio,
                                         const std::filesystem::path* csv) {
  const AveragingStudy st =
      convergence_study(sigma, s, multiscale_points(radii, angles), eps, a, c);
  if (csv) write_study_csv(st, *csv);
  const std::string w = "[" + format_number(a) + "," + format_number(c) + "]";
  Json common{{"window", w},
              {"points", st.points.size()},
              {"eps", st.eps},
              {"max_error_largest_eps", st.errors.col(0).maxCoeff()},
              {"max_error_smallest_eps", st.max_error_smallest}};
  std::vector<CheckRecord> out;
  CheckRecord mono{"averaging.monotone", st.monotone, true, common};
  int nonmono = 0;
  for (Eigen::Index p = 0; p < st.errors.rows(); ++p) {
    for (Eigen::Index e = 1; e < st.errors.cols(); ++e) {
      if (!(st.errors(p, e) < st.errors(p, e - 1))) {
        ++nonmono;
        break;
      }
    }
  }
  mono.measured["non_monotone_points"] = nonmono;
  out.push_back(mono);
  CheckRecord slope{"averaging.slope", st.min_slope >= min_slope, true, common};
  slope.measured["min_slope"] = st.min_slope;
  slope.measured["threshold"] = min_slope;
  out.push_back(slope);
  CheckRecord ratio{"averaging.ratio", st.worst_ratio <= max_ratio, true, common};
  ratio.measured["worst_ratio"] = st.worst_ratio;
  ratio.measured["threshold"] = max_ratio;
  out.push_back(ratio);
  return out;
}

// ---------------------------------------------------------------------------
// T_eps checks

CheckRecord check_window_decrease(const LyapunovContext& ctx, double eps, double rho, double r,
                                  const std::vector<Vec4>& starts, unsigned workers) {
  const auto reps = parallel_map(
      starts.size(),
      [&](std::size_t i) {
        return window_decrease_check(ctx, eps, starts[i].head<2>(), starts[i].tail<2>(), rho, r);
      },
      workers);
  int passed = 0;
  double min_rate = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (reps[i].pass) ++passed;
    if (reps[i].rate < min_rate) {
      min_rate = reps[i].rate;
      worst = i;
    }
  }
  CheckRecord c{tag("window_decrease", eps), passed == static_cast<int>(reps.size()), true,
                Json::object()};
  c.measured = Json{{"eps", eps},
                    {"rho", rho},
                    {"r", r},
                    {"starts", reps.size()},
                    {"passed", passed},
                    {"min_rate", min_rate},
                    {"worst_start", vec_json(starts[worst])},
                    {"worst_v_start", reps[worst].v_start}};
  return c;
}

CaptureBatch check_capture(const LyapunovContext& ctx, double eps, double r,
                           const std::vector<Vec4>& starts, double horizon, double max_time,
                           unsigned workers) {
  CaptureBatch out;
  out.reports = parallel_map(
      starts.size(),
      [&](std::size_t i) {
        return capture_check(ctx, eps, starts[i].head<2>(), starts[i].tail<2>(), r, horizon,
                             max_time);
      },
      workers);
  int captured = 0, passed = 0;
  double max_t = 0.0, max_post = 0.0;
  for (const auto& rep : out.reports) {
    if (rep.captured) {
      ++captured;
      max_t = std::max(max_t, rep.t_capture);
      max_post = std::max(max_post, rep.post_max_v0);
    }
    if (rep.pass) ++passed;
  }
  out.record = CheckRecord{tag("capture", eps), passed == static_cast<int>(starts.size()), true,
                           Json::object()};
  out.record.measured = Json{{"eps", eps},
                             {"r", r},
                             {"starts", starts.size()},
                             {"captured", captured},
                             {"passed", passed},
                             {"max_capture_time", max_t},
                             {"max_post_v0_over_2r", max_post / (2.0 * r)},
                             {"horizon", horizon},
                             {"max_time", max_time}};
  return out;
}

std::vector<CheckRecord> check_l2(const LyapunovContext& ctx, double eps, double rho, double r,
                                  const std::vector<Vec4>& starts, int windows, double horizon,
                                  double tail_width, unsigned workers) {
  // Window lengths cycle through 1/2, 1, 3/2, 2, each rounded to whole periods.
  const double lo = std::max(rho, 0.5);
  std::vector<double> lengths;
  for (double t : {0.5, 1.0, 1.5, 2.0}) {
    double periods = std::round(t / eps);
    if (periods * eps < lo - 1e-12) periods = std::ceil(lo / eps);
    if (periods * eps > 2.0 + 1e-12) periods = std::floor(2.0 / eps);
    lengths.push_back(periods * eps);
  }
  const int per_run = static_cast<int>(lengths.size());
  const double spacing = std::round((horizon / per_run) / eps) * eps;
  const int runs = (windows + per_run - 1) / per_run;
  if (static_cast<int>(starts.size()) < runs) throw UsageError("check_l2: not enough starts");

  struct RunResult {
    bool captured = false;
    std::vector<L2Report> l2;
    TailReport tail;
  };
  const auto results = parallel_map(
      static_cast<std::size_t>(runs),
      [&](std::size_t k) {
        RunResult rr;
        Trajectory traj;
        const CaptureReport cap = capture_check(ctx, eps, starts[k].head<2>(),
                                                starts[k].tail<2>(), r, horizon, 1000.0, &traj);
        rr.captured = cap.captured;
        if (!cap.captured) return rr;
        const int here = std::min(per_run, windows - static_cast<int>(k) * per_run);
        for (int j = 0; j < here; ++j) {
          rr.l2.push_back(
              l2_estimate_check(traj, eps, cap.t_capture + j * spacing, lengths[j], rho));
        }
        std::vector<double> tail_starts;
        for (double t = 0.0; t + tail_width <= horizon + 1e-9; t += tail_width) {
          tail_starts.push_back(cap.t_capture + t);
        }
        rr.tail = barbalat_tail_check(traj, tail_starts, tail_width);
        return rr;
      },
      workers);

  int measured_windows = 0, passed = 0, uncaptured = 0, tails_ok = 0;
  double c_min = std::numeric_limits<double>::infinity();
  Json sups = Json::array();
  for (const auto& rr : results) {
    if (!rr.captured) {
      ++uncaptured;
      continue;
    }
    for (const auto& w : rr.l2) {
      ++measured_windows;
      if (w.pass) ++passed;
      c_min = std::min(c_min, -w.ratio);
    }
    if (rr.tail.decreasing) ++tails_ok;
    sups.push_back(rr.tail.sups);
  }
  CheckRecord l2{tag("l2_estimate", eps),
                 uncaptured == 0 && measured_windows == windows && passed == windows, true,
                 Json::object()};
  l2.measured = Json{{"eps", eps},
                     {"windows", measured_windows},
                     {"passed", passed},
                     {"uncaptured_runs", uncaptured},
                     {"c_min", std::isfinite(c_min) ? Json(c_min) : Json(nullptr)},
                     {"lengths", lengths}};
  CheckRecord tail{tag("tail_sup", eps), uncaptured == 0 && tails_ok == runs, true,
                   Json::object()};
  tail.measured = Json{{"eps", eps}, {"runs", runs}, {"decreasing", tails_ok},
                       {"width", tail_width}, {"sups", sups}};
  return {l2, tail};
}

// ---------------------------------------------------------------------------
// Linear endgame

std::vector<CheckRecord> check_hurwitz(const ModifiedSaturation& s, const std::vector<double>& eps,
                                       double tol) {
  std::vector<CheckRecord> out;
  const Vec4 k_eps = feedback_gain(1.0).k_eps;
  for (double e : eps) {
    const double a = spectral_abscissa(a_eps_matrix(e));
    CheckRecord c{tag("hurwitz.a_eps", e), a < 0.0, true, Json{{"eps", e}, {"abscissa", a}}};
    out.push_back(c);
    const double cl = spectral_abscissa(closed_loop_matrix(e, k_eps));
    out.push_back(CheckRecord{tag("hurwitz.closed_loop", e), cl < 0.0, false,
                              Json{{"eps", e}, {"abscissa", cl}}});
  }
  const double sp = s.s_prime_0();
  const double measured = spectral_abscissa(t0_linearization_block(sp));
  // Roots of l^2 + s l + s = 0.
  const std::complex<double> disc = std::sqrt(std::complex<double>(sp * sp - 4.0 * sp, 0.0));
  const double expected = std::max(((-sp + disc) / 2.0).real(), ((-sp - disc) / 2.0).real());
  const double gap = std::fabs(measured - expected);
  out.push_back(CheckRecord{"hurwitz.t0_block", gap <= tol && measured < 0.0, true,
                            Json{{"s_prime_0", sp},
                                 {"abscissa", measured},
                                 {"quadratic_root", expected},
                                 {"gap", gap},
                                 {"tol", tol}}});
  return out;
}

// ---------------------------------------------------------------------------
// Equivalences

CheckRecord check_scaling_equivalence(const SaturationFn& sigma, std::mt19937_64& rng, double eps,
                                      int samples, double horizon, double tol) {
  const Mat4 d = d_eps(eps);
  const double dt = 5e-3;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vec4 k;
    for (int j = 0; j < 4; ++j) k(j) = uniform(rng, -1.0, 1.0);
    const Vec4 x0 = sphere_point(rng, 4, uniform(rng, 0.5, 5.0));
    const Vec4 k_eps = d.inverse() * k;
    // Matched steps (fast = eps * slow): RK4 commutes with the linear map and
    // the time rescaling, so the gap measures the map and not the step error
    // at the kinks of sigma.
    const double h = 2.5e-4;
    const Trajectory slow = integrate(SystemSpec::s1(k, sigma), x0, 0.0, horizon / eps,
                                      StepControl::fixed(h), dt / eps);
    const Trajectory fast = integrate(SystemSpec::s_eps(eps, k_eps, sigma), Vec4(d * x0), 0.0,
                                      horizon, StepControl::fixed(eps * h), dt);
    const Trajectory mapped = scale_trajectory(eps, slow);
    if (mapped.size() != fast.size()) throw NumericError("scaling equivalence: grids differ", 0.0);
    for (std::size_t n = 0; n < fast.size(); ++n) {
      worst = std::max(worst, (mapped.state(n) - fast.state(n)).cwiseAbs().maxCoeff());
    }
  }
  CheckRecord c{tag("scaling_equivalence", eps), worst <= tol, true, Json::object()};
  c.measured = Json{{"eps", eps}, {"samples", samples}, {"horizon", horizon},
                    {"max_gap", worst}, {"tol", tol}};
  return c;
}

std::vector<CheckRecord> check_coordinates(const SaturationFn& sigma, std::mt19937_64& rng,
                                           double eps, double residual_tol, double identity_tol) {
  const SaturationFn smooth = smooth_for_residuals(sigma);
  const FeedbackGain g = feedback_gain(eps);
  const Vec4 x0 = sphere_point(rng, 4, uniform(rng, 1.0, 5.0));
  const double dt = eps / 2000.0;
  const Trajectory xs = integrate(SystemSpec::s_eps(eps, g.k_eps, smooth), x0, 0.0, 1.0,
                                  StepControl::fixed(dt / 4.0), dt);
  Trajectory zs(4);
  double worst_identity = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = xs.time(i);
    const Vec4 x = xs.state(i);
    const State4 zy = s_to_t(t, eps, State4::from_stacked(x, Coords::XY));
    zs.push(t, zy.stacked());
    worst_identity =
        std::max(worst_identity, std::fabs(b_eps(t, eps).dot(zy.first) - g.k_eps.dot(x)));
  }
  const ResidualReport res = ode_residual(SystemSpec::t_eps(eps, smooth), zs, 4);
  return {
      CheckRecord{tag("coordinates.residual", eps), res.max <= residual_tol, true,
                  Json{{"eps", eps},
                       {"sigma", smooth.name()},
                       {"max_residual", res.max},
                       {"at", res.time},
                       {"tol", residual_tol}}},
      CheckRecord{tag("coordinates.identity", eps), worst_identity <= identity_tol, true,
                  Json{{"eps", eps}, {"max_gap", worst_identity}, {"tol", identity_tol}}},
  };
}

CheckRecord check_normal_form(const SaturationFn& sigma, std::mt19937_64& rng, int samples,
                              double residual_tol) {
  const SaturationFn smooth = smooth_for_residuals(sigma);
  double worst_res = 0.0, worst_inv = 0.0, worst_sat = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double omega = uniform(rng, 1.0, 10.0);
    const Vec2 b1 = random_planar(rng, 0.1, 3.0);
    const Vec2 b2 = random_planar(rng, 0.1, 3.0);
    Vec4 k;
    for (int j = 0; j < 4; ++j) k(j) = uniform(rng, -1.0, 1.0);
    const Vec4 x0 = sphere_point(rng, 4, uniform(rng, 0.5, 3.0));
    const NormalFormData nf = normal_form(omega, b1, b2, smooth);
    worst_inv = std::max(worst_inv, (nf.transform * nf.inverse - Mat4::Identity()).norm());
    worst_sat = std::max({worst_sat, std::fabs(nf.sigma_normalized.sigma_inf() - 1.0),
                          std::fabs(nf.sigma_normalized.sigma_prime_0() - 1.0)});

    const double c = nf.time_scale;
    const double dtau = 1.0 / 2000.0;
    const Trajectory xs = integrate(SystemSpec::cdi(omega, b1, b2, k, smooth), x0, 0.0, 2.0 * c,
                                    StepControl::fixed(c * dtau / 4.0), c * dtau);
    Trajectory big(4);
    double scale = 1.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      big.push(xs.time(n) / c, nf.forward(xs.state(n)));
      scale = std::max(scale, big.back_state().norm());
    }
    const SystemSpec target =
        SystemSpec::cdi(kTwoPi, Vec2::Zero(), Vec2(0.0, 1.0), nf.map_gain(k), nf.sigma_normalized);
    worst_res = std::max(worst_res, ode_residual(target, big, 4).max / scale);
  }
  const bool pass = worst_res <= residual_tol && worst_inv <= 1e-12 && worst_sat <= 1e-8;
  CheckRecord c{"normal_form", pass, true, Json::object()};
  c.measured = Json{{"samples", samples},
                    {"sigma", smooth.name()},
                    {"max_relative_residual", worst_res},
                    {"tol", residual_tol},
                    {"max_inverse_error", worst_inv},
                    {"max_normalization_gap", worst_sat}};
  return c;
}

// ---------------------------------------------------------------------------
// Headline closed loop and integrator order

CheckRecord check_headline(const SaturationFn& sigma, std::mt19937_64& rng, double eps, int starts,
                           double radius, double t_end, double target) {
  const SystemSpec spec = SystemSpec::s1(feedback_gain(eps).k, sigma);
  int reached = 0, decaying = 0;
  double worst_final = 0.0, max_slope = -std::numeric_limits<double>::infinity();
  double max_time = 0.0;
  for (int i = 0; i < starts; ++i) {
    const Vec4 x0 = sphere_point(rng, 4, radius * std::pow(uniform(rng, 1e-4, 1.0), 0.25));
    auto below = [target](double, const Eigen::VectorXd& x) { return x.norm() < target; };
    const Trajectory traj = integrate(spec, x0, 0.0, t_end, StepControl::fixed(1.0 / 200.0),
                                      1.0, below);
    const double fin = traj.back_state().norm();
    worst_final = std::max(worst_final, fin);
    if (fin < target) {
      ++reached;
      max_time = std::max(max_time, traj.back_time());
    }
    // Log-linear fit over the second half of the run.
    std::vector<double> ts, ls;
    for (std::size_t n = traj.size() / 2; n < traj.size(); ++n) {
      const double nrm = traj.state(n).norm();
      if (nrm > 0.0) {
        ts.push_back(traj.time(n));
        ls.push_back(std::log(nrm));
      }
    }
    double slope = 0.0;
    if (ts.size() >= 2) {
      const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
      const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / ls.size();
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t n = 0; n < ts.size(); ++n) {
        sxy += (ts[n] - mt) * (ls[n] - ml);
        sxx += (ts[n] - mt) * (ts[n] - mt);
      }
      slope = sxy / sxx;
    }
    if (slope < 0.0) ++decaying;
    max_slope = std::max(max_slope, slope);
  }
  CheckRecord c{"headline", reached == starts && decaying == starts, true, Json::object()};
  c.measured = Json{{"eps", eps},
                    {"starts", starts},
                    {"reached_target", reached},
                    {"target", target},
                    {"t_end", t_end},
                    {"worst_final_norm", worst_final},
                    {"max_time_to_target", max_time},
                    {"decaying_tails", decaying},
                    {"max_tail_slope", max_slope},
                    // S_eps time is eps times S1 time.
                    {"linear_abscissa",
                     eps * spectral_abscissa(closed_loop_matrix(eps, feedback_gain(eps).k_eps))}};
  return c;
}

CheckRecord check_rk4_order(double h) {
  const Mat2 a = kTwoPi * a0<double>();
  auto f = [&a](double, const Vec2& x) -> Vec2 { return a * x; };
  const Vec2 x0(1.0, 0.0);
  auto err = [&](double step) {
    const Trajectory t = integrate(f, x0, 0.0, 1.0, StepControl::fixed(step), 1.0);
    return (Vec2(t.back_state()) - rotation(kTwoPi) * x0).norm();
  };
  const double e1 = err(h);
  const double e2 = err(h / 2.0);
  const double ratio = e1 / e2;
  CheckRecord c{"rk4_order", std::fabs(ratio - 16.0) <= 3.0, true, Json::object()};
  c.measured = Json{{"h", h}, {"error_h", e1}, {"error_h_half", e2}, {"ratio", ratio}};
  return c;
}

// ---------------------------------------------------------------------------
// Suites

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"saturation", "averaging", "lyapunov-T0",
                                              "window-decrease", "capture", "l2",
                                              "hurwitz", "equivalence", "all"};
  return names;
}

namespace {

// Adversarial z = y = a e1: b_eps(0) = e2 is orthogonal to z.
const std::vector<double> kWindowAdversarial{10.0, 20.0, 40.0, 80.0};
const std::vector<double> kCaptureAdversarial{8.0, 12.0, 16.0, 20.0};

std::vector<Vec4> capture_starts(const VerifyContext& ctx, double eps, int count) {
  const auto& v = ctx.verify();
  auto rng = ctx.rng(fnv1a(tag("capture", eps)));
  return sample_starts(ctx.lyapunov(), rng, v.capture_radii, count, v.r, 10.0 * v.r,
                       kCaptureAdversarial);
}

SuiteResult run_one(const VerifyContext& ctx, const std::string& suite,
                    const std::filesystem::path* out_dir) {
  const auto& v = ctx.verify();
  const unsigned workers = ctx.config().workers;
  SuiteResult res;
  res.suite = suite;
  auto add = [&res](CheckRecord c) { res.checks.push_back(std::move(c)); };
  auto add_all = [&res](std::vector<CheckRecord> cs) {
    for (auto& c : cs) res.checks.push_back(std::move(c));
  };

  if (suite == "saturation") {
    add(check_axioms(ctx.sigma()));
    add(check_mod_sat_axioms(ctx.s()));
    add(check_slope_at_zero(ctx.s(), v.formula_tol));
    add(check_formula_agreement(ctx.s(), v.formula_tol));
    add(report_s_inf(ctx.s()));
    add(check_scaling(ctx.s()));
    res.constants["s_inf"] = ctx.s().s_inf();
    res.constants["s_prime_0"] = ctx.s().s_prime_0();
    res.constants["c2"] = res.checks.back().measured["c2"];
  } else if (suite == "averaging") {
    std::filesystem::path csv;
    if (out_dir) csv = *out_dir / "averaging.csv";
    add_all(check_averaging(ctx.sigma(), ctx.s(), v.averaging_radii, v.averaging_angles,
                            v.averaging_eps, v.averaging_window[0], v.averaging_window[1],
                            v.averaging_slope, v.averaging_ratio, out_dir ? &csv : nullptr));
    auto spot = check_averaging(ctx.sigma(), ctx.s(), v.averaging_radii, v.averaging_angles,
                                v.averaging_eps, v.averaging_spot_window[0],
                                v.averaging_spot_window[1], v.averaging_slope, v.averaging_ratio);
    for (auto& c : spot) {
      c.name = "spot_" + c.name;
      c.mandatory = false;
      add(std::move(c));
    }
    res.constants["averaging_min_slope"] = res.checks[1].measured["min_slope"];
  } else if (suite == "lyapunov-T0") {
    auto rj = ctx.rng(fnv1a("jacobian"));
    add(check_jacobian(ctx.s(), rj, v.jacobian_points, v.jacobian_tol, v.spd_points));
    auto rg = ctx.rng(fnv1a("monotonicity"));
    add(check_monotonicity(ctx.s(), rg, v.gap_points));
    auto rt = ctx.rng(fnv1a("decrease.t0"));
    add(check_decrease(ctx.lyapunov(), SystemSpec::t0(ctx.s_shared()), rt, v.t0_starts,
                       v.t0_radii, v.t0_t_end, v.t0_final_norm));
    for (int n : {1, 2, 3}) {
      auto rn = ctx.rng(fnv1a("decrease.fn." + std::to_string(n)));
      add(check_decrease(ctx.lyapunov(), SystemSpec::fn(n, ctx.s_shared()), rn,
                         v.generalization_starts, v.t0_radii, v.t0_t_end, v.t0_final_norm));
    }
    auto rd = ctx.rng(fnv1a("decrease.di"));
    add(check_decrease(ctx.lyapunov(), SystemSpec::di(ctx.sigma()), rd, v.generalization_starts,
                       v.t0_radii, v.t0_t_end, v.t0_final_norm));
  } else if (suite == "window-decrease") {
    for (double e : v.eps) {
      auto rng = ctx.rng(fnv1a(tag("window", e)));
      const auto starts = sample_starts(ctx.lyapunov(), rng, v.window_radii, v.window_starts, v.r,
                                        std::numeric_limits<double>::infinity(),
                                        kWindowAdversarial);
      add(check_window_decrease(ctx.lyapunov(), e, v.rho, v.r, starts, workers));
      res.constants[tag("min_rate", e)] = res.checks.back().measured["min_rate"];
    }
  } else if (suite == "capture") {
    for (double e : v.eps) {
      const auto starts = capture_starts(ctx, e, v.capture_starts);
      auto batch = check_capture(ctx.lyapunov(), e, v.r, starts, v.capture_horizon,
                                 v.capture_max_time, workers);
      res.constants[tag("max_capture_time", e)] = batch.record.measured["max_capture_time"];
      add(std::move(batch.record));
    }
  } else if (suite == "l2") {
    for (double e : v.eps) {
      const int runs = (v.l2_windows + 3) / 4;
      const auto starts = capture_starts(ctx, e, runs);
      add_all(check_l2(ctx.lyapunov(), e, v.rho, v.r, starts, v.l2_windows, v.l2_horizon,
                       v.tail_width, workers));
      res.constants[tag("l2_c", e)] = res.checks[res.checks.size() - 2].measured["c_min"];
    }
  } else if (suite == "hurwitz") {
    add_all(check_hurwitz(ctx.s(), v.hurwitz_eps, v.hurwitz_tol));
    for (const auto& c : res.checks) {
      if (c.measured.contains("eps")) {
        res.constants[c.name] = c.measured["abscissa"];
      }
    }
  } else if (suite == "equivalence") {
    for (double e : v.equivalence_eps) {
      auto rs = ctx.rng(fnv1a(tag("scaling", e)));
      add(check_scaling_equivalence(ctx.sigma(), rs, e, v.equivalence_samples,
                                    v.equivalence_horizon, v.equivalence_tol));
      auto rc = ctx.rng(fnv1a(tag("coordinates", e)));
      add_all(check_coordinates(ctx.sigma(), rc, e, v.residual_tol, v.identity_tol));
    }
    auto rn = ctx.rng(fnv1a("normal_form"));
    add(check_normal_form(ctx.sigma(), rn, v.equivalence_samples, v.residual_tol));
  } else {
    throw UsageError("unknown suite \"" + suite + "\"");
  }
  return res;
}

}  // namespace

SuiteResult run_suite(const VerifyContext& ctx, const std::string& suite,
                      const std::filesystem::path* out_dir) {
  if (suite != "all") return run_one(ctx, suite, out_dir);
  SuiteResult all;
  all.suite = "all";
  for (const auto& name : suite_names()) {
    if (name != "all") all.append(run_one(ctx, name, out_dir));
  }
  return all;
}

// ---------------------------------------------------------------------------
// Sweep

Json SweepResult::to_json() const {
  Json cells_json = Json::array();
  for (const auto& c : cells) {
    cells_json.push_back(Json{{"eps", c.eps},
                              {"rho", c.rho},
                              {"r", c.r},
                              {"starts", c.starts},
                              {"passed", c.passed},
                              {"min_rate", c.min_rate},
                              {"pass", c.pass}});
  }
  Json j;
  j["cells"] = cells_json;
  j["empirical_eps0"] = eps0 ? Json(*eps0) : Json(nullptr);
  return j;
}

SweepResult run_sweep(const VerifyContext& ctx) {
  const auto& sw = ctx.config().sweep;
  struct Key {
    double eps, rho, r;
  };
  std::vector<Key> keys;
  for (double e : sw.eps) {
    for (double rho : sw.rho) {
      for (double r : sw.r) keys.push_back({e, rho, r});
    }
  }
  const auto cells = parallel_map(
      keys.size(),
      [&](std::size_t i) {
        const Key& k = keys[i];
        auto rng = ctx.rng(fnv1a("sweep." + std::to_string(i)));
        const auto starts = sample_starts(ctx.lyapunov(), rng, sw.radii, sw.starts, k.r,
                                          std::numeric_limits<double>::infinity(),
                                          kWindowAdversarial);
        const CheckRecord rec = check_window_decrease(ctx.lyapunov(), k.eps, k.rho, k.r, starts, 1);
        SweepCell c;
        c.eps = k.eps;
        c.rho = k.rho;
        c.r = k.r;
        c.starts = sw.starts;
        c.passed = rec.measured["passed"].get<int>();
        c.min_rate = rec.measured["min_rate"].get<double>();
        c.pass = rec.pass;
        return c;
      },
      ctx.config().workers);

  SweepResult res;
  res.cells = cells;
  std::vector<double> eps_sorted = sw.eps;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());
  for (double e : eps_sorted) {
    const bool ok = std::all_of(cells.begin(), cells.end(),
                                [e](const SweepCell& c) { return c.eps != e || c.pass; });
    if (ok) {
      res.eps0 = e;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Commands

Json report_header(const RunConfig& config, const std::string& command) {
  Json j;
  j["tool"] = "cdistab";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(config);
  j["seed"] = config.seed ? Json(*config.seed) : Json(nullptr);
  j["sigma"] = config.sigma;
  return j;
}

namespace {

std::filesystem::path prepare_out(const RunConfig& config) {
  std::filesystem::path out(config.out);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw UsageError("cannot create output directory " + out.string());
  return out;
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

SystemSpec simulate_spec(const SimulateConfig& s, const SaturationFn& sigma,
                         const std::shared_ptr<const ModifiedSaturation>& mod) {
  const FeedbackGain g = feedback_gain(s.eps);
  switch (system_kind_from_string(s.system)) {
    case SystemKind::CDI: {
      if (s.gain) return SystemSpec::cdi(s.omega, s.b1, s.b2, *s.gain, sigma);
      // Pull the explicit normal-form feedback back to the original coordinates.
      const NormalFormData nf = normal_form(s.omega, s.b1, s.b2, sigma);
      const Vec4 k = nf.k1 * nf.transform.transpose() * g.k;
      return SystemSpec::cdi(s.omega, s.b1, s.b2, k, sigma);
    }
    case SystemKind::S1:
      return SystemSpec::s1(s.gain.value_or(g.k), sigma);
    case SystemKind::SEps:
      return SystemSpec::s_eps(s.eps, s.gain.value_or(g.k_eps), sigma);
    case SystemKind::TEps:
      return SystemSpec::t_eps(s.eps, sigma);
    case SystemKind::T0:
      return SystemSpec::t0(mod);
    case SystemKind::DI:
      return SystemSpec::di(sigma);
    case SystemKind::Fn:
      return SystemSpec::fn(s.n, mod);
    case SystemKind::LinearAEps:
      return SystemSpec::linear_a_eps(s.eps);
  }
  throw UsageError("unknown system");
}

std::vector<std::string> state_labels(const SystemSpec& spec) {
  if (spec.kind == SystemKind::DI) return {"z", "y"};
  if (spec.kind == SystemKind::Fn) {
    std::vector<std::string> n;
    for (int i = 1; i <= spec.n; ++i) n.push_back("z" + std::to_string(i));
    for (int i = 1; i <= spec.n; ++i) n.push_back("y" + std::to_string(i));
    return n;
  }
  if (spec.coords() == Coords::ZY) return {"z1", "z2", "y1", "y2"};
  return {"x11", "x12", "x21", "x22"};
}

void add_simulation_diagnostics(const SystemSpec& spec, const VerifyContext& ctx,
                                Trajectory& traj) {
  switch (spec.kind) {
    case SystemKind::TEps:
      add_teps_diagnostics(ctx.lyapunov(), spec.eps, traj);
      break;
    case SystemKind::T0:
    case SystemKind::Fn:
      add_t0_diagnostics(ctx.lyapunov(), traj);
      break;
    case SystemKind::DI:
      add_diagnostic(traj, "v", [&](double, const Eigen::VectorXd& x) {
        return v_di(ctx.sigma(), x(0), x(1));
      });
      add_diagnostic(traj, "v_dot", [&](double, const Eigen::VectorXd& x) {
        return v_di_dot(ctx.sigma(), x(0), x(1));
      });
      break;
    default:
      add_diagnostic(traj, "norm", [](double, const Eigen::VectorXd& x) { return x.norm(); });
      break;
  }
}

Json trajectory_summary(const Trajectory& traj) {
  Json j;
  j["samples"] = traj.size();
  j["steps"] = traj.steps;
  j["rejected_steps"] = traj.rejected_steps;
  j["largest_step"] = traj.largest_step;
  if (traj.empty()) return j;
  j["final_time"] = traj.back_time();
  j["final_state"] = vec_json(traj.back_state());
  j["final_norm"] = traj.back_state().norm();
  double max_norm = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) max_norm = std::max(max_norm, traj.state(i).norm());
  j["max_norm"] = max_norm;
  for (const char* name : {kChanV0, "v"}) {
    if (!traj.has_channel(name)) continue;
    const auto& v = traj.channel(name);
    bool decreasing = true;
    for (std::size_t i = 1; i < v.size(); ++i) decreasing = decreasing && v[i] < v[i - 1];
    j[std::string(name) + "_initial"] = v.front();
    j[std::string(name) + "_final"] = v.back();
    j[std::string(name) + "_strictly_decreasing"] = decreasing;
  }
  return j;
}

}  // namespace

int cmd_simulate(const RunConfig& config) {
  const VerifyContext ctx(config);
  const SimulateConfig& s = config.simulate;
  const SystemSpec spec = simulate_spec(s, ctx.sigma(), ctx.s_shared());
  Eigen::VectorXd x0;
  if (s.x0) {
    if (static_cast<int>(s.x0->size()) != spec.dimension()) {
      throw UsageError("simulate.x0 must have " + std::to_string(spec.dimension()) + " entries");
    }
    x0 = Eigen::Map<const Eigen::VectorXd>(s.x0->data(), spec.dimension());
  } else {
    auto rng = ctx.rng(fnv1a("simulate.x0"));
    x0 = sphere_point(rng, spec.dimension(), s.x0_radius);
  }

  const auto out = prepare_out(config);
  Json report = report_header(config, "simulate");
  report["system"] = to_string(spec.kind);
  report["x0"] = vec_json(x0);
  int code = kExitPass;
  Trajectory traj;
  try {
    traj = integrate(spec, x0, 0.0, s.t_end, s.step.control(), s.sample_dt);
    report["diverged"] = false;
  } catch (const DivergenceError& e) {
    traj = e.partial();
    report["diverged"] = true;
    report["divergence_time"] = e.last_time();
    code = kExitDivergence;
  }
  traj.state_names = state_labels(spec);
  if (!traj.empty()) add_simulation_diagnostics(spec, ctx, traj);
  write_csv(traj, out / "trajectory.csv");
  report["summary"] = trajectory_summary(traj);
  write_json(report, out / "summary.json");
  std::cout << "simulate " << to_string(spec.kind) << ": " << traj.size() << " samples, final |x| = "
            << (traj.empty() ? 0.0 : traj.back_state().norm())
            << (code == kExitDivergence ? " (diverged)" : "") << '\n';
  return code;
}

int cmd_verify(const RunConfig& config, const std::string& suite) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw UsageError("unknown suite \"" + suite + "\"");
  }
  const VerifyContext ctx(config);
  const auto out = prepare_out(config);
  const SuiteResult res = run_suite(ctx, suite, &out);
  Json report = report_header(config, "verify");
  report["result"] = res.to_json();
  write_json(report, out / ("verify_" + suite + ".json"));
  for (const auto& c : res.checks) {
    std::cout << (c.pass ? "PASS " : (c.mandatory ? "FAIL " : "info ")) << c.name << '\n';
  }
  std::cout << "suite " << suite << ": " << (res.pass() ? "PASS" : "FAIL") << '\n';
  return res.pass() ? kExitPass : kExitFail;
}

int cmd_sweep(const RunConfig& config) {
  const VerifyContext ctx(config);
  const auto out = prepare_out(config);
  const SweepResult res = run_sweep(ctx);
  Json report = report_header(config, "sweep");
  report["result"] = res.to_json();
  write_json(report, out / "sweep.json");
  std::ofstream csv(out / "sweep.csv");
  csv << "eps,rho,r,starts,passed,min_rate,pass\n";
  for (const auto& c : res.cells) {
    csv << format_number(c.eps) << ',' << format_number(c.rho) << ',' << format_number(c.r) << ','
        << c.starts << ',' << c.passed << ',' << format_number(c.min_rate) << ','
        << (c.pass ? 1 : 0) << '\n';
    std::cout << "eps=" << format_number(c.eps) << " rho=" << format_number(c.rho)
              << " R=" << format_number(c.r) << " passed " << c.passed << '/' << c.starts
              << " min rate " << format_number(c.min_rate) << '\n';
  }
  if (res.eps0) {
    std::cout << "empirical eps0 = " << format_number(*res.eps0) << '\n';
  } else {
    std::cout << "no eps in the grid passes every cell\n";
  }
  return res.eps0 ? kExitPass : kExitFail;
}

}  // namespace cdistab
