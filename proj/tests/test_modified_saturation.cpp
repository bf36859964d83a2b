#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cdistab/modified_saturation.hpp"
#include "cdistab/quadrature.hpp"

using namespace cdistab;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed forms of S and S' for the standard saturation:
// S = xi / 2 on [0, 1], (1/pi)(xi asin(1/xi) + sqrt(1 - 1/xi^2)) beyond.
double s_closed(double xi) {
  const double a = std::fabs(xi);
  const double v = a <= 1.0 ? a / 2.0 : (a * std::asin(1.0 / a) + std::sqrt(1.0 - 1.0 / (a * a))) / kPi;
  return std::copysign(v, xi);
}

double s_prime_closed(double xi) {
  const double a = std::fabs(xi);
  if (a <= 1.0) return 0.5;
  return (std::asin(1.0 / a) - std::sqrt(1.0 - 1.0 / (a * a)) / a) / kPi;
}

const ModifiedSaturation& standard() {
  static const ModifiedSaturation s(SaturationFn::standard());
  return s;
}

const ModifiedSaturation& tanh_s() {
  static const ModifiedSaturation s(SaturationFn::tanh());
  return s;
}

}  // namespace

TEST(ModSat, StandardMatchesClosedForm) {
  const auto& s = standard();
  for (double xi : {0.0, 0.1, 0.5, 0.999, 1.0, 1.001, 1.5, 3.0, 10.0, 77.0, 400.0, 5000.0}) {
    EXPECT_NEAR(s.value(xi), s_closed(xi), 1e-9) << xi;
    EXPECT_NEAR(s.value(-xi), -s_closed(xi), 1e-9) << xi;
    EXPECT_NEAR(s.exact_value(xi), s_closed(xi), 1e-9) << xi;
  }
}

TEST(ModSat, StandardSlopeMatchesClosedForm) {
  const auto& s = standard();
  for (double xi : {0.0, 0.3, 0.9, 1.0 + 1e-3, 1.2, 2.0, 7.5, 90.0, 1e4}) {
    EXPECT_NEAR(s.derivative(xi), s_prime_closed(xi), 5e-8) << xi;
    EXPECT_NEAR(s.derivative(-xi), s_prime_closed(xi), 5e-8) << xi;
  }
  // Square-root cusp just past the kink.
  for (double d : {1e-7, 1e-5, 1e-3}) {
    EXPECT_NEAR(s.derivative(1.0 + d), s_prime_closed(1.0 + d), 1e-7) << d;
  }
}

TEST(ModSat, SlopeAtZeroIsHalfSigmaSlope) {
  // S'(0) = sigma'(0) / 2.
  EXPECT_NEAR(standard().derivative(0.0), 0.5, 1e-12);
  EXPECT_NEAR(standard().s_prime_0(), 0.5, 1e-12);
  EXPECT_NEAR(tanh_s().s_prime_0(), 0.5, 1e-10);
  const ModifiedSaturation scaled(SaturationFn::tanh().scaled(3.0, 2.0));
  EXPECT_NEAR(scaled.s_prime_0(), 0.75, 1e-10);
  EXPECT_NEAR(scaled.ratio(0.0), 0.75, 1e-10);
}

TEST(ModSat, LimitIsTwoOverPiTimesSigmaInf) {
  EXPECT_NEAR(standard().s_inf(), 2.0 / kPi, 1e-9);
  EXPECT_NEAR(tanh_s().s_inf(), 2.0 / kPi, 1e-9);
  const ModifiedSaturation at(SaturationFn::arctan());
  EXPECT_NEAR(at.s_inf(), 2.0 / kPi * (kPi / 2.0), 1e-8);
  // Not sigma_inf / 2.
  EXPECT_GT(std::fabs(standard().s_inf() - 0.5), 0.1);
}

TEST(ModSat, TanhAgreesWithDirectQuadrature) {
  for (double xi : {0.2, 1.0, 2.7, 15.0, 300.0}) {
    const double q = adaptive_simpson(
        [xi](double v) { return std::sin(v) * std::tanh(xi * std::sin(v)); }, 0.0, kPi / 2,
        SimpsonOptions{1e-13, 0.0, 40, 4}).value * 2.0 / kPi;
    EXPECT_NEAR(tanh_s().value(xi), q, 1e-9) << xi;
  }
}

TEST(ModSat, TwoDerivativeFormulasAgree) {
  for (const auto* s : {&standard(), &tanh_s()}) {
    for (int i = 0; i <= 80; ++i) {
      const double xi = 1e-2 * std::pow(1e4, i / 80.0);
      EXPECT_NEAR(s->exact_derivative(xi), s->exact_derivative_alt(xi), 1e-8) << xi;
      EXPECT_NEAR(s->exact_derivative(-xi), s->exact_derivative_alt(-xi), 1e-8) << xi;
    }
  }
}

TEST(ModSat, HWeightPrintedAndSimplifiedFormsAgree) {
  for (double v = 0.0; v < kPi / 2; v += 0.01) {
    const double s = std::sin(v);
    EXPECT_NEAR(h_weight(v), s * (2.0 - s * s) / (1.0 + s), 1e-14);
  }
  EXPECT_NEAR(h_weight(kPi / 2), 0.5, 1e-15);
}

TEST(ModSat, AntiderivativeIntegratesValue) {
  const auto& s = standard();
  EXPECT_NEAR(s.antiderivative(0.8), 0.16, 1e-12);
  EXPECT_NEAR(s.antiderivative(-0.8), 0.16, 1e-12);
  for (double r : {1.5, 4.0, 60.0}) {
    const double q = 0.25 + adaptive_simpson(s_closed, 1.0, r, SimpsonOptions{1e-12}).value;
    EXPECT_NEAR(s.antiderivative(r), q, 1e-8) << r;
  }
  const double h = 1e-5;
  for (double r : {0.4, 2.2, 30.0}) {
    EXPECT_NEAR((s.antiderivative(r + h) - s.antiderivative(r - h)) / (2 * h), s.value(r), 1e-8);
  }
}

TEST(ModSat, IsItselfASaturation) {
  for (const auto* s : {&standard(), &tanh_s()}) {
    const auto rep = validate_saturation(make_probe(*s));
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << s->sigma().name() << " " << c.item;
  }
}

TEST(ModSat, ScalingBoundPositive) {
  std::vector<double> xi, m{1, 2, 4, 8, 16};
  for (int i = 0; i <= 100; ++i) xi.push_back(1e-2 * std::pow(1e4, i / 100.0));
  for (const auto* s : {&standard(), &tanh_s()}) {
    const auto rep = check_scaling_bound(*s, xi, m);
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.c2, 0.0);
    // M = 1 contributes the ratio 1.
    EXPECT_LE(rep.c2, 1.0 + 1e-12);
  }
}

TEST(ModSat, RejectsBadOptions) {
  ModSatOptions o;
  o.slope_tol = 0.0;
  EXPECT_ANY_THROW(ModifiedSaturation(SaturationFn::standard(), o));
}
