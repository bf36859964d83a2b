#pragma once

// V0(z, y) = |y|^2 + G(|z|) + G(|z - y|),  G(r) = integral_0^r S,
// its derivative along T0, the three-term split of its derivative along T_eps,
// and the window, capture and L2 checkers built on simulated trajectories.

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "cdistab/geometry.hpp"
#include "cdistab/integrator.hpp"
#include "cdistab/modified_saturation.hpp"

namespace cdistab {

class LyapunovContext {
 public:
  explicit LyapunovContext(std::shared_ptr<const ModifiedSaturation> s);

  const ModifiedSaturation& s() const { return *s_; }
  const SaturationFn& sigma() const { return s_->sigma(); }
  std::shared_ptr<const ModifiedSaturation> shared() const { return s_; }

 private:
  std::shared_ptr<const ModifiedSaturation> s_;
};

/// z, y in R^n; v0_rn on planar inputs agrees with v0.
double v0_rn(const LyapunovContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& z,
             const Eigen::Ref<const Eigen::VectorXd>& y);
double v0(const LyapunovContext& ctx, const Vec2& z, const Vec2& y);
double v0(const LyapunovContext& ctx, const Vec4& zy);

/// -S(|z|)^2 - y^T (f(z) - f(z - y)).
double v0_dot_t0_rn(const LyapunovContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& z,
                    const Eigen::Ref<const Eigen::VectorXd>& y);
double v0_dot_t0(const LyapunovContext& ctx, const Vec2& z, const Vec2& y);

struct TermSplit {
  double term1 = 0.0;  ///< -S(|z|) (b^T z / |z|) sigma(b^T z)
  double term2 = 0.0;  ///< -y^T (f(z) - f(z - y))
  double term3 = 0.0;  ///< 2 y^T (f(z) - b sigma(b^T z))
  double total() const { return term1 + term2 + term3; }
};

TermSplit v0_dot_teps_terms(const LyapunovContext& ctx, double t, double eps, const Vec2& z,
                            const Vec2& y);

/// Channel names attached by add_teps_diagnostics.
inline constexpr const char* kChanV0 = "v0";
inline constexpr const char* kChanBz = "bz";
inline constexpr const char* kChanTerm1 = "term1";
inline constexpr const char* kChanTerm2 = "term2";
inline constexpr const char* kChanTerm3 = "term3";

/// v0, b_eps^T z and the three terms at every sample of a T_eps trajectory.
void add_teps_diagnostics(const LyapunovContext& ctx, double eps, Trajectory& traj);
/// v0 and v0_dot_t0 of a T0 or Fn trajectory (z first, y second).
void add_t0_diagnostics(const LyapunovContext& ctx, Trajectory& traj);

struct WindowIntegrals {
  double l_eps = 0.0;
  double k1_eps = 0.0;
  double k2_eps = 0.0;
  double sum() const { return l_eps + k1_eps + k2_eps; }
};

/// Composite Simpson over samples [i0, i1] of a T_eps trajectory carrying the
/// term channels; needs at least three uniformly spaced samples.
WindowIntegrals window_integrals(const Trajectory& traj, std::size_t i0, std::size_t i1);
WindowIntegrals window_integrals(const Trajectory& traj);

/// Samples per rotation period used by the T_eps checkers.
inline constexpr int kSamplesPerPeriod = 40;

struct WindowReport {
  Vec2 z0 = Vec2::Zero();
  Vec2 y0 = Vec2::Zero();
  double eps = 0.0;
  double rho = 0.0;
  double r = 0.0;
  double v_start = 0.0;
  double t_best = 0.0;
  double delta_v = 0.0;
  double rate = 0.0;  ///< -delta_v / t_best at the best window
  WindowIntegrals terms;
  std::vector<double> t_grid;
  std::vector<double> rates;
  bool pass = false;
};

/// Scans 16 window lengths in [rho m, 2 rho m], m = max(1, |y0|); passes if
/// some window has V0 decreasing at a positive average rate.
WindowReport window_decrease_check(const LyapunovContext& ctx, double eps, const Vec2& z0,
                                   const Vec2& y0, double rho, double r);

struct CaptureReport {
  Vec2 z0 = Vec2::Zero();
  Vec2 y0 = Vec2::Zero();
  double eps = 0.0;
  double r = 0.0;
  double v_start = 0.0;
  bool captured = false;
  double t_capture = 0.0;
  double post_max_v0 = 0.0;
  double horizon = 0.0;
  bool pass = false;
};

inline constexpr double kCaptureSlack = 1e-3;

/// Runs T_eps until V0 <= R (at most max_time), then `horizon` more time
/// units; passes if V0 <= 2R (1 + kCaptureSlack) over that horizon.
CaptureReport capture_check(const LyapunovContext& ctx, double eps, const Vec2& z0, const Vec2& y0,
                            double r, double horizon, double max_time = 1000.0);
/// Same, also returning the simulated trajectory (with diagnostics).
CaptureReport capture_check(const LyapunovContext& ctx, double eps, const Vec2& z0, const Vec2& y0,
                            double r, double horizon, double max_time, Trajectory* out);

struct L2Report {
  double t2 = 0.0;
  double window = 0.0;
  double delta_v = 0.0;
  double integral = 0.0;  ///< integral of |y|^2 + (b^T z)^2 over the window
  double ratio = 0.0;     ///< delta_v / integral; the measured c is -ratio
  bool pass = false;
};

/// Window [t2, t2 + T] of a T_eps trajectory with diagnostics; T in
/// [max(rho, 1/2), 2] with T / eps an integer.
L2Report l2_estimate_check(const Trajectory& traj, double eps, double t2, double window,
                           double rho = 0.1);

struct TailReport {
  std::vector<double> starts;
  std::vector<double> sups;  ///< sup |b^T z| over [T, T + width]
  bool decreasing = false;
};

/// Tail sups of |b_eps^T z| on consecutive windows starting at each entry of starts.
TailReport barbalat_tail_check(const Trajectory& traj, const std::vector<double>& starts,
                               double width = 5.0);

/// The (DI) Lyapunov function y^2 + Sigma(z) + Sigma(z - y) and its derivative.
double v_di(const SaturationFn& sigma, double z, double y);
double v_di_dot(const SaturationFn& sigma, double z, double y);

struct DecreaseReport {
  std::size_t samples = 0;
  bool strictly_decreasing = false;
  bool derivative_negative = false;
  double final_norm = 0.0;
  double first_violation_time = -1.0;
  bool pass = false;
};

/// Integrates T0 / Fn / DI from x0 (RK4, step h) sampling every 0.1 until the
/// state norm falls below stop_norm or t_end; checks the sampled V strictly
/// decreases and its analytic derivative is negative off the origin.
DecreaseReport decrease_check(const LyapunovContext& ctx, const SystemSpec& spec,
                              const Eigen::VectorXd& x0, double t_end = 500.0,
                              double stop_norm = 1e-8, double h = 1e-2);

}  // namespace cdistab
