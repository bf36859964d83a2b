#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "cdistab/errors.hpp"
#include "cdistab/systems.hpp"

using namespace cdistab;

namespace {

std::shared_ptr<const ModifiedSaturation> standard_s() {
  static auto s = std::make_shared<const ModifiedSaturation>(SaturationFn::standard());
  return s;
}

Vec2 rand2(std::mt19937_64& g, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec2(u(g), u(g));
}

}  // namespace

TEST(Rhs, T0EquilibriumAndYZeroSlice) {
  const auto spec = SystemSpec::t0(standard_s());
  EXPECT_EQ(rhs(spec, 0.0, State4::zy(Vec2::Zero(), Vec2::Zero())).stacked(), Vec4::Zero());
  const Vec2 z(3.0, -4.0);
  const Vec2 f = averaged_field(*standard_s(), z);
  const State4 d = rhs(spec, 1.7, State4::zy(z, Vec2::Zero()));
  EXPECT_LE((d.first + f).norm(), 1e-15);
  EXPECT_LE((d.second + f).norm(), 1e-15);
}

TEST(Rhs, TEpsAtTimeZero) {
  // b_eps(0) = e2, so with z = e2, y = 0 both halves equal -e2 sigma(1).
  for (double eps : {0.3, 0.05}) {
    const auto spec = SystemSpec::t_eps(eps, SaturationFn::standard());
    const State4 d = rhs(spec, 0.0, State4::zy(Vec2(0.0, 1.0), Vec2::Zero()));
    EXPECT_LE((d.first - Vec2(0.0, -1.0)).norm(), 1e-15);
    EXPECT_LE((d.second - Vec2(0.0, -1.0)).norm(), 1e-15);
  }
}

TEST(Rhs, TagMismatchIsUsageError) {
  const auto spec = SystemSpec::t0(standard_s());
  EXPECT_THROW(rhs(spec, 0.0, State4::xy(Vec2::Zero(), Vec2::Zero())), UsageError);
  const auto s1 = SystemSpec::s1(feedback_gain(0.1).k, SaturationFn::standard());
  EXPECT_THROW(rhs(s1, 0.0, State4::zy(Vec2::Zero(), Vec2::Zero())), UsageError);
}

TEST(Rhs, S1IsTheDisplayedField) {
  std::mt19937_64 g(3);
  const Vec4 k(0.3, -0.2, 0.5, 0.1);
  const auto sigma = SaturationFn::tanh();
  const auto spec = SystemSpec::s1(k, sigma);
  for (int i = 0; i < 20; ++i) {
    Vec4 x;
    x << rand2(g, 3.0), rand2(g, 3.0);
    Vec4 expected = j2_omega(kTwoPi) * x;
    expected(3) -= sigma(k.dot(x));
    EXPECT_LE((rhs4(spec, 0.0, x) - expected).norm(), 1e-14);
  }
}

TEST(Rhs, CdiRequiresControllability) {
  EXPECT_THROW(SystemSpec::cdi(1.0, Vec2(1, 0), Vec2::Zero(), Vec4::Zero(), SaturationFn::standard()),
               NotControllableError);
  EXPECT_THROW(SystemSpec::t_eps(0.0, SaturationFn::standard()), DomainError);
}

TEST(Rhs, FnWithTwoEqualsT0) {
  std::mt19937_64 g(5);
  const auto t0 = SystemSpec::t0(standard_s());
  const auto f2 = SystemSpec::fn(2, standard_s());
  for (int i = 0; i < 50; ++i) {
    Vec4 x;
    x << rand2(g, 20.0), rand2(g, 20.0);
    EXPECT_EQ(rhs(f2, 0.0, Eigen::VectorXd(x)), Eigen::VectorXd(rhs4(t0, 0.0, x)));
  }
}

TEST(Rhs, FnWithOneIsSignTimesS) {
  const auto f1 = SystemSpec::fn(1, standard_s());
  const auto& s = *standard_s();
  for (double z : {-3.0, -0.4, 0.0, 0.2, 8.0}) {
    for (double y : {-1.0, 0.5}) {
      const Eigen::VectorXd d = rhs(f1, 0.0, Eigen::Vector2d(z, y));
      const double fz = z == 0.0 ? 0.0 : std::copysign(s.value(std::fabs(z)), z);
      EXPECT_NEAR(d(0), y - fz, 1e-15);
      EXPECT_NEAR(d(1), -fz, 1e-15);
    }
  }
}

TEST(Rhs, DoubleIntegrator) {
  const auto di = SystemSpec::di(SaturationFn::standard());
  const Eigen::VectorXd d = rhs(di, 0.0, Eigen::Vector2d(2.0, 0.5));
  EXPECT_DOUBLE_EQ(d(0), -0.5);
  EXPECT_DOUBLE_EQ(d(1), -1.0);
}

TEST(AveragedField, RadialAndEquivariant) {
  const auto& s = *standard_s();
  EXPECT_EQ(averaged_field(s, Vec2(0.0, 0.0)), Vec2::Zero());
  EXPECT_NEAR(averaged_field(s, Vec2(2.5, 0.0))(0), s.value(2.5), 1e-15);
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> th(0.0, kTwoPi);
  for (int i = 0; i < 50; ++i) {
    const Vec2 z = rand2(g, 10.0);
    const Mat2 r = rotation(th(g));
    EXPECT_LE((averaged_field(s, Vec2(r * z)) - r * averaged_field(s, z)).norm(), 1e-13);
    EXPECT_NEAR(averaged_field(s, z).norm(), s.value(z.norm()), 1e-13);
  }
}

TEST(Jacobian, AtOriginAndOnAxis) {
  const auto& s = *standard_s();
  EXPECT_LE((averaged_field_jacobian(s, Vec2::Zero()) - 0.5 * Mat2::Identity()).norm(), 1e-12);
  const Mat2 j = averaged_field_jacobian(s, Vec2(3.0, 0.0));
  EXPECT_NEAR(j(0, 0), s.derivative(3.0), 1e-14);
  EXPECT_NEAR(j(1, 1), s.value(3.0) / 3.0, 1e-14);
  EXPECT_NEAR(j(0, 1), 0.0, 1e-15);
  // Continuity at 0.
  EXPECT_LE((averaged_field_jacobian(s, Vec2(1e-9, 1e-9)) - 0.5 * Mat2::Identity()).norm(), 1e-8);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937_64 g(11);
  const ModifiedSaturation tanh_s(SaturationFn::tanh());
  for (int i = 0; i < 100; ++i) {
    const Vec2 z = rand2(g, 30.0);
    const double h = 1e-6 * std::max(1.0, z.norm());
    Mat2 fd;
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e(k) = h;
      fd.col(k) = (averaged_field(tanh_s, Vec2(z + e)) - averaged_field(tanh_s, Vec2(z - e))) / (2 * h);
    }
    const Mat2 j = averaged_field_jacobian(tanh_s, z);
    EXPECT_LE((fd - j).norm() / j.norm(), 1e-6);
    EXPECT_LE((j - j.transpose()).norm(), 1e-12);
  }
}

TEST(Monotonicity, GapExamples) {
  const auto& s = *standard_s();
  EXPECT_EQ(monotonicity_gap(s, Vec2(3.0, 1.0), Vec2::Zero()), 0.0);
  EXPECT_NEAR(monotonicity_gap(s, Vec2::Zero(), Vec2(1.0, 0.0)), s.value(1.0), 1e-15);
  std::mt19937_64 g(13);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_GT(monotonicity_gap(s, rand2(g, 50.0), rand2(g, 50.0)), 0.0);
  }
}

TEST(Feedback, Gains) {
  const auto g1 = feedback_gain(1.0);
  EXPECT_EQ(g1.k, Vec4(0, 1, 0, 1));
  const auto g = feedback_gain(0.1);
  EXPECT_NEAR((g.k - Vec4(0, 0.01, 0, 0.1)).norm(), 0.0, 1e-17);
  EXPECT_EQ(g.k_eps, Vec4(0, 1, 0, 1));
  EXPECT_LE((d_eps(0.1).inverse() * g.k - g.k_eps).norm(), 1e-15);
}

TEST(Coordinates, AtTimeZeroAndRoundTrip) {
  const State4 x = State4::xy(Vec2(1, 2), Vec2(3, 4));
  const State4 zy = s_to_t(0.0, 0.2, x);
  EXPECT_EQ(zy.coords, Coords::ZY);
  EXPECT_EQ(zy.first, Vec2(4, 6));
  EXPECT_EQ(zy.second, Vec2(3, 4));
  std::mt19937_64 g(17);
  for (int i = 0; i < 100; ++i) {
    const State4 a = State4::xy(rand2(g, 5.0), rand2(g, 5.0));
    const double t = std::uniform_real_distribution<double>(0.0, 10.0)(g);
    const State4 back = t_to_s(t, 0.07, s_to_t(t, 0.07, a));
    EXPECT_LE((back.stacked() - a.stacked()).norm(), 1e-13);
    // b_eps^T z = K_eps^T x with K_eps = (e2; e2).
    const State4 z = s_to_t(t, 0.07, a);
    EXPECT_NEAR(b_eps(t, 0.07).dot(z.first), feedback_gain(0.07).k_eps.dot(a.stacked()), 1e-12);
  }
}

TEST(BEps, RotatesClockwiseWithPeriodEps) {
  EXPECT_LE((b_eps(0.0, 0.1) - Vec2(0, 1)).norm(), 1e-15);
  EXPECT_LE((b_eps(0.025, 0.1) - Vec2(1, 0)).norm(), 1e-15);
  EXPECT_LE((b_eps(0.1, 0.1) - Vec2(0, 1)).norm(), 1e-14);
}

TEST(AEps, OnlyTheLastDiagonalEntryChanges) {
  const Mat4 a = a_eps_matrix(0.5);
  Mat4 diff = a - j2_omega(kTwoPi / 0.5);
  EXPECT_EQ(diff(3, 3), -1.0);
  diff(3, 3) = 0.0;
  EXPECT_EQ(diff.norm(), 0.0);
}

TEST(Spectral, Examples) {
  EXPECT_NEAR(spectral_abscissa(a0()), 0.0, 1e-12);
  EXPECT_NEAR(spectral_abscissa(j2_omega(1.0)), 0.0, 1e-10);
  EXPECT_NEAR(spectral_abscissa(t0_linearization_block(0.5)), -0.25, 1e-12);
  // Real distinct roots: s = 5 gives l^2 + 5 l + 5.
  EXPECT_NEAR(spectral_abscissa(t0_linearization_block(5.0)), (-5.0 + std::sqrt(5.0)) / 2.0, 1e-12);
}

TEST(Spectral, FourByFourAgreesWithComplexRoots) {
  // Closed loop in the S_eps frame: compare with a direct companion check.
  for (double eps : {1.0, 0.1, 0.01}) {
    const Mat4 m = closed_loop_matrix(eps, feedback_gain(eps).k_eps);
    const Eigen::EigenSolver<Mat4> es(m, false);
    double expected = -1e300;
    for (int i = 0; i < 4; ++i) expected = std::max(expected, es.eigenvalues()(i).real());
    EXPECT_NEAR(spectral_abscissa(m), expected, 1e-10 * std::max(1.0, m.norm()));
    // The printed matrix leaves the upper-left rotation block untouched.
    EXPECT_NEAR(spectral_abscissa(a_eps_matrix(eps)), 0.0, 1e-12);
  }
}

TEST(Names, SystemKindsRoundTrip) {
  for (auto k : {SystemKind::CDI, SystemKind::S1, SystemKind::SEps, SystemKind::TEps,
                 SystemKind::T0, SystemKind::DI, SystemKind::Fn, SystemKind::LinearAEps}) {
    EXPECT_EQ(system_kind_from_string(to_string(k)), k);
  }
  EXPECT_ANY_THROW(system_kind_from_string("nope"));
}
