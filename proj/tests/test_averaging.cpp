#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "cdistab/averaging.hpp"
#include "cdistab/errors.hpp"

using namespace cdistab;

namespace {

Vec2 radial(const ModifiedSaturation& s, const Vec2& z) {
  return s.value(z.norm()) * z / z.norm();
}

}  // namespace

TEST(WindowAverage, WholePeriodsAreExact) {
  // Smooth sigma: the periodic quadrature converges fast and only the
  // averaging identity is left.
  const auto sigma = SaturationFn::tanh();
  const ModifiedSaturation s(sigma);
  for (const Vec2& z : {Vec2(0.3, 0.1), Vec2(-4.0, 2.0), Vec2(0.0, 12.0)}) {
    const Vec2 avg = window_average(sigma, 0.01, z, 0.0, 1.0);
    EXPECT_LE((avg - radial(s, z)).norm(), 1e-6) << z.transpose();
  }
}

TEST(WindowAverage, KinkedSigmaHitsQuadratureFloor) {
  const auto sigma = SaturationFn::standard();
  const ModifiedSaturation s(sigma);
  const Vec2 z(-4.0, 2.0);
  const double coarse = (window_average(sigma, 0.1, z, 0.0, 1.0) - radial(s, z)).norm();
  const double fine = (window_average(sigma, 0.025, z, 0.0, 1.0) - radial(s, z)).norm();
  EXPECT_LE(std::max(coarse, fine), 1e-3);
  // Whole periods at every eps: no O(eps) term to shrink.
  EXPECT_GT(fine, 0.15 * coarse);
}

TEST(WindowAverage, PartialPeriodErrorShrinksWithEps) {
  const auto sigma = SaturationFn::tanh();
  const ModifiedSaturation s(sigma);
  const Vec2 z(2.0, -1.0);
  double worst = 0.0;
  for (double eps : {0.1, 0.03, 0.01, 0.003}) {
    const double err = (window_average(sigma, eps, z, 0.3, 1.7) - radial(s, z)).norm();
    EXPECT_LE(err, 1.2 * eps) << eps;
    worst = std::max(worst, err);
  }
  EXPECT_GT(worst, 1e-6);
}

TEST(WindowAverage, BadWindow) {
  const auto sigma = SaturationFn::standard();
  EXPECT_THROW(window_average(sigma, 0.1, Vec2(1.0, 0.0), -0.1, 1.0), DomainError);
  EXPECT_THROW(window_average(sigma, 0.1, Vec2(1.0, 0.0), 1.0, 1.0), DomainError);
  EXPECT_THROW(window_average(sigma, 0.0, Vec2(1.0, 0.0), 0.0, 1.0), DomainError);
  EXPECT_THROW(oscillatory_field(sigma, -1.0, 0.0, Vec2(1.0, 0.0)), DomainError);
}

TEST(LogLogSlope, PowerLaw) {
  const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> err;
  for (double e : eps) err.push_back(3.0 * std::pow(e, 1.5));
  EXPECT_NEAR(log_log_slope(eps, err), 1.5, 1e-12);
  EXPECT_THROW(log_log_slope({0.1}, {0.2}), UsageError);
  EXPECT_THROW(log_log_slope({0.1, 0.2}, {0.2}), UsageError);
}

TEST(ConvergenceStudy, InputChecksAndCsv) {
  const auto sigma = SaturationFn::standard();
  const ModifiedSaturation s(sigma);
  const auto pts = multiscale_points({0.1, 1.0}, 4);
  ASSERT_EQ(pts.size(), 8u);
  EXPECT_LE((pts[0] - Vec2(0.1, 0.0)).norm(), 1e-15);
  EXPECT_THROW(multiscale_points({1.0}, 0), UsageError);
  EXPECT_THROW(convergence_study(sigma, s, pts, {0.1, 0.05}), UsageError);
  EXPECT_THROW(convergence_study(sigma, s, pts, {0.1, 0.2, 0.05}), UsageError);
  EXPECT_THROW(convergence_study(sigma, s, {}, {0.1, 0.05, 0.025}), UsageError);

  const auto study = convergence_study(sigma, s, pts, {0.1, 0.05, 0.025}, 0.3, 1.7);
  EXPECT_EQ(study.errors.rows(), 8);
  EXPECT_EQ(study.errors.cols(), 3);
  const auto path = std::filesystem::temp_directory_path() / "cdistab_avg.csv";
  write_study_csv(study, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "zx,zy,eps,err");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 24);
  std::filesystem::remove(path);
}
