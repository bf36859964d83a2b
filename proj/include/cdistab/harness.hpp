#pragma once

// Run configuration, the verification suites, sweeps and report assembly
// behind the cdistab command line tool.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdistab/integrator.hpp"
#include "cdistab/lyapunov.hpp"
#include "cdistab/modified_saturation.hpp"
#include "cdistab/saturation.hpp"
#include "cdistab/systems.hpp"

namespace cdistab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitDivergence = 3 };

struct StepConfig {
  std::string mode = "fixed";
  double h = 1e-3;
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_max = 0.1;
  StepControl control() const;
};

struct SimulateConfig {
  std::string system = "t0";
  double eps = 0.05;
  double omega = kTwoPi;
  Vec2 b1 = Vec2::Zero();
  Vec2 b2 = Vec2(0.0, 1.0);
  std::optional<Vec4> gain;  ///< defaults to the explicit feedback for s1 / s_eps / cdi
  int n = 2;
  std::optional<std::vector<double>> x0;
  double x0_radius = 10.0;  ///< random start on this sphere when x0 is absent
  double t_end = 10.0;
  double sample_dt = 0.01;
  StepConfig step;
};

struct VerifyConfig {
  std::string suite = "all";
  std::vector<double> eps{0.05, 0.02};
  double rho = 0.1;
  double r = 50.0;

  int window_starts = 50;
  std::vector<double> window_radii{10.0, 20.0, 40.0, 80.0};

  int capture_starts = 50;
  std::vector<double> capture_radii{8.0, 12.0, 16.0, 20.0};
  double capture_horizon = 10.0;
  double capture_max_time = 1000.0;

  int l2_windows = 20;
  double l2_horizon = 180.0;
  double tail_width = 60.0;  ///< longer than the slow rotation of T0 near V0 = 2R

  int t0_starts = 100;
  std::vector<double> t0_radii{1.0, 10.0, 25.0, 50.0, 100.0};
  double t0_t_end = 500.0;
  double t0_final_norm = 1e-6;
  int generalization_starts = 20;

  int jacobian_points = 100;
  double jacobian_tol = 1e-6;
  int spd_points = 10000;
  int gap_points = 10000;
  double formula_tol = 1e-8;

  std::vector<double> averaging_eps{0.1, 0.05, 0.025};
  std::vector<double> averaging_radii{0.1, 1.0, 10.0};
  int averaging_angles = 8;
  std::vector<double> averaging_window{0.0, 1.0};
  std::vector<double> averaging_spot_window{0.3, 1.73};  ///< length not a whole number of periods
  double averaging_slope = 0.8;
  double averaging_ratio = 0.15;

  std::vector<double> hurwitz_eps{1.0, 0.1, 0.01};
  double hurwitz_tol = 1e-10;

  std::vector<double> equivalence_eps{0.5, 0.1};
  int equivalence_samples = 10;
  double equivalence_horizon = 5.0;
  double equivalence_tol = 1e-5;
  double residual_tol = 1e-6;
  double identity_tol = 1e-12;
};

struct SweepConfig {
  std::vector<double> eps{0.05, 0.02, 0.01};
  std::vector<double> rho{0.1};
  std::vector<double> r{50.0};
  int starts = 10;
  std::vector<double> radii{10.0, 20.0, 40.0, 80.0};
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::string sigma = "standard";  ///< built-in name, or a CSV path for a tabulated sigma
  unsigned workers = 1;
  std::string out = ".";
  SimulateConfig simulate;
  VerifyConfig verify;
  SweepConfig sweep;
};

/// Strict parse: unknown keys, wrong types and non-positive tolerances are
/// UsageErrors.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
Json to_json(const RunConfig& config);
/// FNV-1a 64 of the canonical JSON of the resolved config without out and
/// workers, as 16 hex digits.
std::string config_hash(const RunConfig& config);

SaturationFn make_sigma(const std::string& name);

struct CheckRecord {
  std::string name;
  bool pass = false;
  bool mandatory = true;
  Json measured = Json::object();
  Json to_json() const;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckRecord> checks;
  Json constants = Json::object();
  /// True iff every mandatory check passes.
  bool pass() const;
  const CheckRecord* find(const std::string& name) const;
  void append(const SuiteResult& other);
  Json to_json() const;
};

/// Everything a suite needs; built once per run.
class VerifyContext {
 public:
  explicit VerifyContext(RunConfig config);

  const RunConfig& config() const { return config_; }
  const VerifyConfig& verify() const { return config_.verify; }
  const SaturationFn& sigma() const { return sigma_; }
  const ModifiedSaturation& s() const { return *s_; }
  std::shared_ptr<const ModifiedSaturation> s_shared() const { return s_; }
  const LyapunovContext& lyapunov() const { return lyap_; }
  /// Generator seeded from the run seed and a per-check salt; UsageError
  /// without a seed.
  std::mt19937_64 rng(std::uint64_t salt) const;

 private:
  RunConfig config_;
  SaturationFn sigma_;
  std::shared_ptr<const ModifiedSaturation> s_;
  LyapunovContext lyap_;
};

// Initial-condition samplers.

/// Uniform on the sphere of radius r in R^dim.
Eigen::VectorXd sphere_point(std::mt19937_64& rng, int dim, double r);
/// Starts (z, y) on spheres of the given radii (cycled) with lo <= V0 <= hi,
/// led by the adversarial family z = y = a e1 (b_eps(0)^T z = 0) for each a in
/// adversarial that satisfies the same bounds.
std::vector<Vec4> sample_starts(const LyapunovContext& ctx, std::mt19937_64& rng,
                                const std::vector<double>& radii, int count, double lo, double hi,
                                const std::vector<double>& adversarial);

// Individual checks.

CheckRecord check_axioms(const SaturationFn& sigma);
CheckRecord check_mod_sat_axioms(const ModifiedSaturation& s);
CheckRecord check_slope_at_zero(const ModifiedSaturation& s, double tol);
CheckRecord check_formula_agreement(const ModifiedSaturation& s, double tol);
CheckRecord report_s_inf(const ModifiedSaturation& s);
CheckRecord check_scaling(const ModifiedSaturation& s);
CheckRecord check_jacobian(const ModifiedSaturation& s, std::mt19937_64& rng, int fd_points,
                           double tol, int spd_points);
CheckRecord check_monotonicity(const ModifiedSaturation& s, std::mt19937_64& rng, int points);

/// Decrease of V0 (T0, Fn) or V (DI) from starts on the given spheres, plus
/// convergence below final_norm by t_end.
CheckRecord check_decrease(const LyapunovContext& ctx, const SystemSpec& spec, std::mt19937_64& rng,
                           int starts, const std::vector<double>& radii, double t_end,
                           double final_norm);

/// Three records: monotone decrease, log-log slope, error ratio.
std::vector<CheckRecord> check_averaging(const SaturationFn& sigma, const ModifiedSaturation& s,
                                         const std::vector<double>& radii, int angles,
                                         const std::vector<double>& eps, double a, double c,
                                         double min_slope, double max_ratio,
                                         const std::filesystem::path* csv = nullptr);

CheckRecord check_window_decrease(const LyapunovContext& ctx, double eps, double rho, double r,
                                  const std::vector<Vec4>& starts, unsigned workers);

struct CaptureBatch {
  CheckRecord record;
  std::vector<CaptureReport> reports;
};
CaptureBatch check_capture(const LyapunovContext& ctx, double eps, double r,
                           const std::vector<Vec4>& starts, double horizon, double max_time,
                           unsigned workers);

/// L2 windows on post-capture trajectories and the tail sups of |b^T z|.
std::vector<CheckRecord> check_l2(const LyapunovContext& ctx, double eps, double rho, double r,
                                  const std::vector<Vec4>& starts, int windows, double horizon,
                                  double tail_width, unsigned workers);

std::vector<CheckRecord> check_hurwitz(const ModifiedSaturation& s, const std::vector<double>& eps,
                                       double tol);

CheckRecord check_scaling_equivalence(const SaturationFn& sigma, std::mt19937_64& rng, double eps,
                                      int samples, double horizon, double tol);
/// ODE residual of the S_eps -> T_eps pushforward and the identity b^T z = K_eps^T x.
std::vector<CheckRecord> check_coordinates(const SaturationFn& sigma, std::mt19937_64& rng,
                                           double eps, double residual_tol, double identity_tol);
CheckRecord check_normal_form(const SaturationFn& sigma, std::mt19937_64& rng, int samples,
                              double residual_tol);

/// Closed-loop S1 under K = (0, eps^2, 0, eps) from random starts with |x0| <= radius.
CheckRecord check_headline(const SaturationFn& sigma, std::mt19937_64& rng, double eps, int starts,
                           double radius, double t_end, double target);

/// Error ratio of RK4 under step halving on x' = 2 pi A0 x over one period.
CheckRecord check_rk4_order(double h);

/// Suites: saturation, averaging, lyapunov-T0, window-decrease, capture, l2,
/// hurwitz, equivalence, all. With out_dir set, the averaging suite also
/// writes its error table there.
const std::vector<std::string>& suite_names();
SuiteResult run_suite(const VerifyContext& ctx, const std::string& suite,
                      const std::filesystem::path* out_dir = nullptr);

struct SweepCell {
  double eps = 0.0;
  double rho = 0.0;
  double r = 0.0;
  int starts = 0;
  int passed = 0;
  double min_rate = 0.0;
  bool pass = false;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::optional<double> eps0;  ///< largest eps whose cells all pass
  Json to_json() const;
};

SweepResult run_sweep(const VerifyContext& ctx);

/// Report envelope shared by every command: tool, version, config hash, seed.
Json report_header(const RunConfig& config, const std::string& command);

/// Command entry points; write into config.out and return an exit code.
int cmd_simulate(const RunConfig& config);
int cmd_verify(const RunConfig& config, const std::string& suite);
int cmd_sweep(const RunConfig& config);

}  // namespace cdistab
