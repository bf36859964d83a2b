#include <gtest/gtest.h>

#include <random>

#include "cdistab/errors.hpp"
#include "cdistab/integrator.hpp"
#include "cdistab/normal_form.hpp"

using namespace cdistab;

TEST(NormalForm, AlreadyNormalIsIdentity) {
  const auto nf = normal_form(kTwoPi, Vec2::Zero(), Vec2(0.0, 1.0), SaturationFn::standard());
  EXPECT_LE((nf.transform - Mat4::Identity()).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(nf.time_scale, 1.0);
  EXPECT_DOUBLE_EQ(nf.k1, 1.0);
  EXPECT_DOUBLE_EQ(nf.k2, 1.0);
}

TEST(NormalForm, InputAlongE1) {
  // b = (0, 2 e1): U2 turns e1 onto e2 and beta = 1/2.
  const auto nf = normal_form(kTwoPi, Vec2::Zero(), Vec2(2.0, 0.0), SaturationFn::standard());
  EXPECT_LE((nf.u2 * Vec2(1.0, 0.0) - Vec2(0.0, 1.0)).norm(), 1e-15);
  EXPECT_NEAR(nf.beta, 0.5, 1e-15);
  EXPECT_LE((nf.beta * nf.u2 * Vec2(2.0, 0.0) - Vec2(0.0, 1.0)).norm(), 1e-15);
}

TEST(NormalForm, TimeRescaleDoublesSlowDrift) {
  const auto nf = normal_form(kTwoPi / 2, Vec2(0.3, 0.1), Vec2(0.0, 1.0), SaturationFn::standard());
  EXPECT_DOUBLE_EQ(nf.time_scale, 2.0);
}

TEST(NormalForm, NotControllable) {
  EXPECT_THROW(normal_form(1.0, Vec2(1.0, 0.0), Vec2::Zero(), SaturationFn::standard()),
               NotControllableError);
  EXPECT_THROW(normal_form(0.0, Vec2(1.0, 0.0), Vec2(0.0, 1.0), SaturationFn::standard()),
               DomainError);
}

TEST(NormalForm, FirstStepAlignsB2WithB1) {
  const Vec2 b1(1.0, -2.0), b2(0.5, 0.25);
  const auto nf = normal_form(3.0, b1, b2, SaturationFn::standard());
  EXPECT_LE((nf.alpha * nf.u1 * b2 - b1).norm(), 1e-14);
  const auto nf0 = normal_form(3.0, Vec2::Zero(), b2, SaturationFn::standard());
  EXPECT_EQ(nf0.alpha, 0.0);
}

TEST(NormalForm, InverseAndNormalizedSaturation) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(1.0, 10.0);
  const SaturationFn sigma = SaturationFn::tanh().scaled(0.7, 0.4);
  for (int i = 0; i < 20; ++i) {
    const Vec2 b1(u(g), u(g)), b2(u(g), u(g));
    const auto nf = normal_form(w(g), b1, b2, sigma);
    EXPECT_LE((nf.transform * nf.inverse - Mat4::Identity()).norm(), 1e-12);
    EXPECT_NEAR(nf.sigma_normalized.sigma_inf(), 1.0, 1e-12);
    EXPECT_NEAR(nf.sigma_normalized.sigma_prime_0(), 1.0, 1e-12);
    // sigma(K^T x) = k2 sigma~(K~^T X).
    const Vec4 k(u(g), u(g), u(g), u(g));
    const Vec4 x(u(g), u(g), u(g), u(g));
    EXPECT_NEAR(sigma(k.dot(x)), nf.k2 * nf.sigma_normalized(nf.map_gain(k).dot(nf.forward(x))), 1e-13);
  }
}

TEST(NormalForm, TransformedTrajectoriesSolveTheNormalForm) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5), w(1.0, 10.0);
  const SaturationFn sigma = SaturationFn::tanh().scaled(1.3, 2.0);
  for (int i = 0; i < 8; ++i) {
    const double omega = w(g);
    const Vec2 b1(u(g), u(g));
    Vec2 b2(u(g), u(g));
    if (b2.norm() < 0.1) b2 = Vec2(0.3, 0.0);
    const Vec4 k(u(g), u(g), u(g), u(g));
    const Vec4 x0(u(g), u(g), u(g), u(g));
    const auto nf = normal_form(omega, b1, b2, sigma);
    const double c = nf.time_scale;
    const double dtau = 1.0 / 4000.0;
    const Trajectory xs = integrate(SystemSpec::cdi(omega, b1, b2, k, sigma), x0, 0.0, 2.0 * c,
                                    StepControl::fixed(c * dtau / 4.0), c * dtau);
    Trajectory big(4);
    double scale = 1.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      big.push(xs.time(n) / c, nf.forward(xs.state(n)));
      scale = std::max(scale, big.back_state().norm());
    }
    const auto target = SystemSpec::cdi(kTwoPi, Vec2::Zero(), Vec2(0.0, 1.0), nf.map_gain(k),
                                        nf.sigma_normalized);
    EXPECT_LE(ode_residual(target, big, 4).max / scale, 1e-6) << "sample " << i;
  }
}

TEST(NormalForm, ExplicitGainPullsBack) {
  // K = k1 T^T K~ turns the normal-form feedback into a CDI feedback with the
  // same closed loop.
  const Vec2 b1(0.4, -0.3), b2(1.2, 0.5);
  const auto sigma = SaturationFn::tanh();
  const auto nf = normal_form(3.0, b1, b2, sigma);
  const Vec4 kt = feedback_gain(0.5).k;
  const Vec4 k = nf.k1 * nf.transform.transpose() * kt;
  EXPECT_LE((nf.map_gain(k) - kt).norm(), 1e-12);
}
