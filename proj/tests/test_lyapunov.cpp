#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "cdistab/errors.hpp"
#include "cdistab/lyapunov.hpp"
#include "cdistab/systems.hpp"

using namespace cdistab;

namespace {

LyapunovContext standard_ctx() {
  return LyapunovContext(std::make_shared<const ModifiedSaturation>(SaturationFn::standard()));
}

// dV0/dt along a vector field by a central difference in the field direction.
double fd_rate(const LyapunovContext& ctx, const Vec4& x, const Vec4& dx) {
  const double h = 1e-6;
  return (v0(ctx, Vec4(x + h * dx)) - v0(ctx, Vec4(x - h * dx))) / (2 * h);
}

}  // namespace

TEST(V0, Examples) {
  const auto ctx = standard_ctx();
  EXPECT_EQ(v0(ctx, Vec2::Zero(), Vec2::Zero()), 0.0);
  // G(r) = r^2 / 4 for r <= 1 under the standard saturation.
  EXPECT_NEAR(v0(ctx, Vec2(0.5, 0.0), Vec2::Zero()), 0.125, 1e-12);
  EXPECT_NEAR(v0(ctx, Vec2::Zero(), Vec2(0.0, 0.4)), 0.16 + 0.04, 1e-12);
  Eigen::VectorXd z(3), y(3);
  z << 0.5, 0.0, 0.0;
  y << 0.0, 0.0, 0.0;
  EXPECT_NEAR(v0_rn(ctx, z, y), 0.125, 1e-12);
}

TEST(V0, DerivativeAlongT0) {
  const auto ctx = standard_ctx();
  const auto spec = SystemSpec::t0(ctx.shared());
  for (const Vec4& x : {Vec4(10.0, 0.0, 0.0, 5.0), Vec4(0.3, -0.2, 0.1, 0.4),
                        Vec4(-3.0, 7.0, 2.0, -1.0)}) {
    const double fd = fd_rate(ctx, x, rhs4(spec, 0.0, x));
    EXPECT_NEAR(v0_dot_t0(ctx, x.head<2>(), x.tail<2>()), fd, 1e-6 * std::max(1.0, std::fabs(fd)));
    EXPECT_LT(v0_dot_t0(ctx, x.head<2>(), x.tail<2>()), 0.0);
  }
}

TEST(V0, ThreeTermsSumToDerivativeAlongTeps) {
  const auto ctx = standard_ctx();
  const double eps = 0.05;
  const auto spec = SystemSpec::t_eps(eps, SaturationFn::standard());
  for (double t : {0.0, 0.013, 0.4}) {
    const Vec4 x(4.0, -2.0, 1.5, 3.0);
    const TermSplit terms = v0_dot_teps_terms(ctx, t, eps, x.head<2>(), x.tail<2>());
    const double fd = fd_rate(ctx, x, rhs4(spec, t, x));
    EXPECT_NEAR(terms.total(), fd, 1e-6 * std::max(1.0, std::fabs(fd))) << t;
    EXPECT_LE(terms.term2, 0.0);
  }
}

TEST(DecreaseCheck, T0FromExample) {
  const auto ctx = standard_ctx();
  Eigen::VectorXd x0(4);
  x0 << 10.0, 0.0, 0.0, 5.0;
  const auto rep = decrease_check(ctx, SystemSpec::t0(ctx.shared()), x0, 200.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_LT(rep.final_norm, x0.norm());
  EXPECT_THROW(decrease_check(ctx, SystemSpec::t_eps(0.1, SaturationFn::standard()), x0),
               UsageError);
}

TEST(DecreaseCheck, DoubleIntegrator) {
  const auto ctx = standard_ctx();
  const auto sigma = SaturationFn::standard();
  const auto spec = SystemSpec::di(sigma);
  Eigen::VectorXd x(2);
  x << 3.0, -2.0;
  const Eigen::VectorXd f = rhs(spec, 0.0, x);
  const double h = 1e-6;
  const double fd = (v_di(sigma, x(0) + h * f(0), x(1) + h * f(1)) -
                     v_di(sigma, x(0) - h * f(0), x(1) - h * f(1))) /
                    (2 * h);
  EXPECT_NEAR(v_di_dot(sigma, x(0), x(1)), fd, 1e-6);
  EXPECT_TRUE(decrease_check(ctx, spec, x, 100.0).pass);
}

TEST(WindowDecrease, LargeStartDecreases) {
  const auto ctx = standard_ctx();
  const auto rep = window_decrease_check(ctx, 0.05, Vec2(30.0, 0.0), Vec2(0.0, 10.0), 0.1, 50.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.rate, 0.0);
  EXPECT_EQ(rep.t_grid.size(), 16u);
  // 40 samples per period over the kinks of the standard sigma.
  EXPECT_NEAR(rep.terms.sum(), rep.delta_v, 2e-2 * std::fabs(rep.delta_v));
}

TEST(WindowIntegrals, TermsIntegrateToDeltaV) {
  const auto ctx =
      LyapunovContext(std::make_shared<const ModifiedSaturation>(SaturationFn::tanh()));
  const double eps = 0.05;
  const double dt = eps / 400;
  Trajectory traj = integrate(SystemSpec::t_eps(eps, SaturationFn::tanh()),
                              Vec4(30.0, 0.0, 0.0, 10.0), 0.0, 1.0, StepControl::fixed(dt), dt);
  add_teps_diagnostics(ctx, eps, traj);
  const auto& v = traj.channel(kChanV0);
  const double dv = v.back() - v.front();
  EXPECT_NEAR(window_integrals(traj).sum(), dv, 1e-5 * std::max(1.0, std::fabs(dv)));
  EXPECT_THROW(window_integrals(traj, 0, 1), UsageError);
}

TEST(WindowDecrease, StartBelowRadiusRejected) {
  const auto ctx = standard_ctx();
  EXPECT_LT(v0(ctx, Vec2(10.0, 0.0), Vec2(0.0, 5.0)), 50.0);
  EXPECT_THROW(window_decrease_check(ctx, 0.05, Vec2(10.0, 0.0), Vec2(0.0, 5.0), 0.1, 50.0),
               DomainError);
  EXPECT_THROW(window_decrease_check(ctx, 0.0, Vec2(30.0, 0.0), Vec2(0.0, 10.0), 0.1, 50.0),
               DomainError);
}

TEST(Capture, AdversarialStartAndL2) {
  const auto ctx = standard_ctx();
  const double eps = 0.02;
  const double r = 50.0;
  const Vec2 a(20.0, 0.0);
  ASSERT_LE(v0(ctx, a, a), 10 * r);
  Trajectory post;
  const auto rep = capture_check(ctx, eps, a, a, r, 10.0, 1000.0, &post);
  EXPECT_TRUE(rep.captured);
  EXPECT_TRUE(rep.pass) << rep.post_max_v0;
  EXPECT_LE(rep.post_max_v0, 2 * r);

  const double t2 = rep.t_capture + 2.0;
  const auto l2 = l2_estimate_check(post, eps, t2, 1.0);
  EXPECT_TRUE(l2.pass);
  EXPECT_LT(l2.ratio, 0.0);
  EXPECT_GT(l2.integral, 0.0);

  EXPECT_THROW(l2_estimate_check(post, eps, t2, 3.0), DomainError);
  EXPECT_THROW(l2_estimate_check(post, eps, t2, 1.01), DomainError);
  EXPECT_THROW(l2_estimate_check(post, eps, t2 + eps / 80, 1.0), RangeError);
  EXPECT_THROW(capture_check(ctx, eps, a, a, r, 5.0), DomainError);

  const auto tail = barbalat_tail_check(post, {rep.t_capture, rep.t_capture + 5.0}, 5.0);
  EXPECT_EQ(tail.sups.size(), 2u);
}
