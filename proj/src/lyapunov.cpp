#include "cdistab/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "cdistab/errors.hpp"
#include "cdistab/quadrature.hpp"
#include "cdistab/systems.hpp"

namespace cdistab {

LyapunovContext::LyapunovContext(std::shared_ptr<const ModifiedSaturation> s) : s_(std::move(s)) {
  if (!s_) throw UsageError("LyapunovContext: modified saturation required");
}

double v0_rn(const LyapunovContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& z,
             const Eigen::Ref<const Eigen::VectorXd>& y) {
  return y.squaredNorm() + ctx.s().antiderivative(z.norm()) +
         ctx.s().antiderivative((z - y).norm());
}

double v0(const LyapunovContext& ctx, const Vec2& z, const Vec2& y) {
  return y.squaredNorm() + ctx.s().antiderivative(z.norm()) +
         ctx.s().antiderivative((z - y).norm());
}

double v0(const LyapunovContext& ctx, const Vec4& zy) {
  return v0(ctx, Vec2(zy.head<2>()), Vec2(zy.tail<2>()));
}

double v0_dot_t0_rn(const LyapunovContext& ctx, const Eigen::Ref<const Eigen::VectorXd>& z,
                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  const ModifiedSaturation& s = ctx.s();
  const double sz = s.value(z.norm());
  const Eigen::VectorXd w = z - y;
  const Eigen::VectorXd gap = s.ratio(z.norm()) * z - s.ratio(w.norm()) * w;
  return -sz * sz - y.dot(gap);
}

double v0_dot_t0(const LyapunovContext& ctx, const Vec2& z, const Vec2& y) {
  const ModifiedSaturation& s = ctx.s();
  const double sz = s.value(z.norm());
  return -sz * sz - y.dot(averaged_field(s, z) - averaged_field(s, Vec2(z - y)));
}

TermSplit v0_dot_teps_terms(const LyapunovContext& ctx, double t, double eps, const Vec2& z,
                            const Vec2& y) {
  const ModifiedSaturation& s = ctx.s();
  const Vec2 b = b_eps(t, eps);
  const double bz = b.dot(z);
  const double sat = ctx.sigma()(bz);
  const Vec2 fz = averaged_field(s, z);
  TermSplit out;
  // f(z)^T b = S(|z|) b^T z / |z|; both vanish at z = 0.
  out.term1 = -fz.dot(b) * sat;
  out.term2 = -y.dot(fz - averaged_field(s, Vec2(z - y)));
  out.term3 = 2.0 * y.dot(fz - b * sat);
  return out;
}

void add_teps_diagnostics(const LyapunovContext& ctx, double eps, Trajectory& traj) {
  const std::size_t n = traj.size();
  std::vector<double> v(n), bz(n), t1(n), t2(n), t3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = traj.state(i);
    const Vec2 z = x.head<2>();
    const Vec2 y = x.tail<2>();
    const double t = traj.time(i);
    v[i] = v0(ctx, z, y);
    bz[i] = b_eps(t, eps).dot(z);
    const TermSplit ts = v0_dot_teps_terms(ctx, t, eps, z, y);
    t1[i] = ts.term1;
    t2[i] = ts.term2;
    t3[i] = ts.term3;
  }
  traj.set_channel(kChanV0, std::move(v));
  traj.set_channel(kChanBz, std::move(bz));
  traj.set_channel(kChanTerm1, std::move(t1));
  traj.set_channel(kChanTerm2, std::move(t2));
  traj.set_channel(kChanTerm3, std::move(t3));
}

void add_t0_diagnostics(const LyapunovContext& ctx, Trajectory& traj) {
  const int n = traj.dim() / 2;
  add_diagnostic(traj, kChanV0, [&](double, const Eigen::VectorXd& x) {
    return v0_rn(ctx, x.head(n), x.tail(n));
  });
  add_diagnostic(traj, "v0_dot", [&](double, const Eigen::VectorXd& x) {
    return v0_dot_t0_rn(ctx, x.head(n), x.tail(n));
  });
}

namespace {

double uniform_spacing(const Trajectory& traj, std::size_t i0, std::size_t i1) {
  const double h = traj.time(i0 + 1) - traj.time(i0);
  for (std::size_t i = i0; i < i1; ++i) {
    if (std::fabs(traj.time(i + 1) - traj.time(i) - h) > 1e-9 * h) {
      throw UsageError("window integrals need uniformly spaced samples");
    }
  }
  return h;
}

double simpson_channel(const std::vector<double>& c, std::size_t i0, std::size_t i1, double h) {
  return composite_simpson(std::span<const double>(c.data() + i0, i1 - i0 + 1), h);
}

}  // namespace

WindowIntegrals window_integrals(const Trajectory& traj, std::size_t i0, std::size_t i1) {
  if (i1 >= traj.size() || i1 < i0 + 2) {
    throw UsageError("window_integrals: segment needs at least three samples");
  }
  const double h = uniform_spacing(traj, i0, i1);
  WindowIntegrals w;
  w.l_eps = simpson_channel(traj.channel(kChanTerm1), i0, i1, h);
  w.k1_eps = simpson_channel(traj.channel(kChanTerm2), i0, i1, h);
  w.k2_eps = simpson_channel(traj.channel(kChanTerm3), i0, i1, h);
  return w;
}

WindowIntegrals window_integrals(const Trajectory& traj) {
  if (traj.size() < 3) throw UsageError("window_integrals: segment needs at least three samples");
  return window_integrals(traj, 0, traj.size() - 1);
}

WindowReport window_decrease_check(const LyapunovContext& ctx, double eps, const Vec2& z0,
                                   const Vec2& y0, double rho, double r) {
  if (!(eps > 0.0) || !(rho > 0.0)) throw DomainError("window_decrease_check: eps, rho > 0");
  WindowReport rep;
  rep.z0 = z0;
  rep.y0 = y0;
  rep.eps = eps;
  rep.rho = rho;
  rep.r = r;
  rep.v_start = v0(ctx, z0, y0);
  if (rep.v_start < r) {
    throw DomainError("window_decrease_check: V0(z0, y0) = " + std::to_string(rep.v_start) +
                      " is below R = " + std::to_string(r));
  }

  // Sixteen window lengths rho m (15 + j) / 15; the sample spacing divides
  // each of them so every candidate window ends on a sample.
  const double m = std::max(1.0, y0.norm());
  const double base = rho * m / 15.0;
  const auto per_base = static_cast<long>(std::ceil(base / (eps / kSamplesPerPeriod)));
  const double dt = base / static_cast<double>(per_base);
  const double t_end = 30.0 * base;

  const SystemSpec spec = SystemSpec::t_eps(eps, ctx.sigma());
  Vec4 x0;
  x0 << z0, y0;
  Trajectory traj = integrate(spec, x0, 0.0, t_end, StepControl::fixed(dt), dt);
  add_teps_diagnostics(ctx, eps, traj);
  const auto& v = traj.channel(kChanV0);

  std::size_t best = 0;
  for (int j = 0; j < 16; ++j) {
    const std::size_t idx = std::min<std::size_t>(traj.size() - 1, (15 + j) * per_base);
    const double t = traj.time(idx);
    rep.t_grid.push_back(t);
    rep.rates.push_back(-(v[idx] - v[0]) / t);
    if (rep.rates.back() > rep.rates[best]) best = static_cast<std::size_t>(j);
  }
  rep.t_best = rep.t_grid[best];
  rep.rate = rep.rates[best];
  const std::size_t idx = std::min<std::size_t>(traj.size() - 1, (15 + best) * per_base);
  rep.delta_v = v[idx] - v[0];
  rep.terms = window_integrals(traj, 0, idx);
  rep.pass = rep.rate > 0.0;
  return rep;
}

CaptureReport capture_check(const LyapunovContext& ctx, double eps, const Vec2& z0, const Vec2& y0,
                            double r, double horizon, double max_time) {
  return capture_check(ctx, eps, z0, y0, r, horizon, max_time, nullptr);
}

CaptureReport capture_check(const LyapunovContext& ctx, double eps, const Vec2& z0, const Vec2& y0,
                            double r, double horizon, double max_time, Trajectory* out) {
  if (!(horizon >= 10.0)) throw DomainError("capture_check: horizon must be at least 10");
  CaptureReport rep;
  rep.z0 = z0;
  rep.y0 = y0;
  rep.eps = eps;
  rep.r = r;
  rep.horizon = horizon;
  rep.v_start = v0(ctx, z0, y0);

  const SystemSpec spec = SystemSpec::t_eps(eps, ctx.sigma());
  const StepControl control = StepControl::fixed(eps / kFixedStepsPerPeriod);
  Vec4 x;
  x << z0, y0;
  double t_cap = 0.0;
  if (rep.v_start > r) {
    // Coarse pass to the capture time on a grid of whole periods.
    const double dt = eps * std::max(1.0, std::round(0.05 / eps));
    auto captured = [&](double, const Eigen::VectorXd& s) { return v0(ctx, Vec4(s)) <= r; };
    const Trajectory seek = integrate(spec, x, 0.0, max_time, control, dt, captured);
    if (v0(ctx, Vec4(seek.back_state())) > r) {
      rep.t_capture = seek.back_time();
      if (out) *out = seek;
      return rep;
    }
    t_cap = seek.back_time();
    x = seek.back_state();
  }
  rep.captured = true;
  rep.t_capture = t_cap;

  const double dt = eps / kSamplesPerPeriod;
  Trajectory post = integrate(spec, x, t_cap, t_cap + horizon, control, dt);
  add_teps_diagnostics(ctx, eps, post);
  const auto& v = post.channel(kChanV0);
  rep.post_max_v0 = *std::max_element(v.begin(), v.end());
  rep.pass = rep.post_max_v0 <= 2.0 * r * (1.0 + kCaptureSlack);
  if (out) *out = std::move(post);
  return rep;
}

L2Report l2_estimate_check(const Trajectory& traj, double eps, double t2, double window,
                           double rho) {
  const double lo = std::max(rho, 0.5);
  if (window < lo - 1e-12 || window > 2.0 + 1e-12) {
    throw DomainError("l2_estimate_check: window length must lie in [max(rho, 1/2), 2]");
  }
  const double periods = window / eps;
  if (std::fabs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods)) {
    throw DomainError("l2_estimate_check: window / eps must be an integer");
  }
  const std::size_t i0 = traj.nearest_index(t2);
  const std::size_t i1 = traj.nearest_index(t2 + window);
  const double tol = 1e-9 * std::max(1.0, std::fabs(t2 + window));
  if (std::fabs(traj.time(i0) - t2) > tol || std::fabs(traj.time(i1) - t2 - window) > tol) {
    throw RangeError("l2_estimate_check: window ends are not sample times");
  }
  if (i1 < i0 + 2) throw UsageError("l2_estimate_check: window too short for the samples");
  const double h = uniform_spacing(traj, i0, i1);

  std::vector<double> integrand(i1 - i0 + 1);
  const auto& bz = traj.channel(kChanBz);
  for (std::size_t i = i0; i <= i1; ++i) {
    integrand[i - i0] = traj.state(i).tail<2>().squaredNorm() + bz[i] * bz[i];
  }
  L2Report rep;
  rep.t2 = t2;
  rep.window = window;
  const auto& v = traj.channel(kChanV0);
  rep.delta_v = v[i1] - v[i0];
  rep.integral = composite_simpson(integrand, h);
  if (rep.integral == 0.0) {
    rep.ratio = 0.0;
    rep.pass = rep.delta_v <= 0.0;
  } else {
    rep.ratio = rep.delta_v / rep.integral;
    rep.pass = rep.ratio < 0.0;
  }
  return rep;
}

TailReport barbalat_tail_check(const Trajectory& traj, const std::vector<double>& starts,
                               double width) {
  const auto& bz = traj.channel(kChanBz);
  TailReport rep;
  rep.starts = starts;
  for (double s : starts) {
    const std::size_t i0 = traj.nearest_index(s);
    const std::size_t i1 = traj.nearest_index(std::min(s + width, traj.back_time()));
    double sup = 0.0;
    for (std::size_t i = i0; i <= i1; ++i) sup = std::max(sup, std::fabs(bz[i]));
    rep.sups.push_back(sup);
  }
  rep.decreasing = rep.sups.size() >= 2;
  for (std::size_t i = 1; i < rep.sups.size(); ++i) {
    if (!(rep.sups[i] < rep.sups[i - 1])) rep.decreasing = false;
  }
  return rep;
}

double v_di(const SaturationFn& sigma, double z, double y) {
  return y * y + sigma.antiderivative(z) + sigma.antiderivative(z - y);
}

double v_di_dot(const SaturationFn& sigma, double z, double y) {
  const double sz = sigma(z);
  return -sz * sz - y * (sz - sigma(z - y));
}

DecreaseReport decrease_check(const LyapunovContext& ctx, const SystemSpec& spec,
                              const Eigen::VectorXd& x0, double t_end, double stop_norm, double h) {
  if (spec.kind != SystemKind::T0 && spec.kind != SystemKind::Fn && spec.kind != SystemKind::DI) {
    throw UsageError("decrease_check: expects T0, Fn or DI");
  }
  const int n = spec.dimension() / 2;
  auto value = [&](const Eigen::VectorXd& x) {
    if (spec.kind == SystemKind::DI) return v_di(*spec.sigma, x(0), x(1));
    return v0_rn(ctx, x.head(n), x.tail(n));
  };
  auto slope = [&](const Eigen::VectorXd& x) {
    if (spec.kind == SystemKind::DI) return v_di_dot(*spec.sigma, x(0), x(1));
    return v0_dot_t0_rn(ctx, x.head(n), x.tail(n));
  };
  auto small = [stop_norm](double, const Eigen::VectorXd& x) { return x.norm() < stop_norm; };
  const Trajectory traj = integrate(spec, x0, 0.0, t_end, StepControl::fixed(h), 0.1, small);

  DecreaseReport rep;
  rep.samples = traj.size();
  rep.strictly_decreasing = true;
  rep.derivative_negative = true;
  double prev = value(traj.state(0));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Eigen::VectorXd x = traj.state(i);
    const bool origin = x.squaredNorm() == 0.0;
    if (!origin && !(slope(x) < 0.0) && rep.derivative_negative) {
      rep.derivative_negative = false;
      if (rep.first_violation_time < 0.0) rep.first_violation_time = traj.time(i);
    }
    if (i > 0) {
      const double cur = value(x);
      if (!(cur < prev) && rep.strictly_decreasing) {
        rep.strictly_decreasing = false;
        if (rep.first_violation_time < 0.0) rep.first_violation_time = traj.time(i);
      }
      prev = cur;
    }
  }
  rep.final_norm = traj.back_state().norm();
  rep.pass = rep.strictly_decreasing && rep.derivative_negative;
  return rep;
}

}  // namespace cdistab
