#pragma once

// Finite-window time averages of the rotating field
//   f_eps(t, z) = b_eps(t) sigma(b_eps(t)^T z)
// and their convergence to the radial field f(z) = S(|z|) z / |z|.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdistab/geometry.hpp"
#include "cdistab/modified_saturation.hpp"
#include "cdistab/quadrature.hpp"
#include "cdistab/saturation.hpp"
#include "cdistab/systems.hpp"

namespace cdistab {

Vec2 oscillatory_field(const SaturationFn& sigma, double eps, double t, const Vec2& z);

/// Composite Simpson nodes on [a, c] with spacing at most eps / 4000. The
/// kinks of the standard sigma leave an error of order (1 / 4000)^2 that does
/// not shrink with eps.
inline constexpr double kAveragingNodesPerPeriod = 4000.0;

/// (1 / (c - a)) integral_a^c field(t) dt for any Vec2-valued field.
template <typename Field>
Vec2 window_average_of(Field&& field, double eps, double a, double c) {
  if (!(a >= 0.0) || !(c > a)) throw DomainError("window_average: need 0 <= a < c");
  if (!(eps > 0.0)) throw DomainError("window_average: eps must be positive");
  auto n = static_cast<long>(std::ceil((c - a) / (eps / kAveragingNodesPerPeriod)));
  if (n % 2 != 0) ++n;
  const double h = (c - a) / static_cast<double>(n);
  Vec2 acc = field(a) + field(c);
  for (long i = 1; i < n; ++i) {
    acc += (i % 2 == 1 ? 4.0 : 2.0) * field(a + static_cast<double>(i) * h);
  }
  return acc * (h / 3.0) / (c - a);
}

Vec2 window_average(const SaturationFn& sigma, double eps, const Vec2& z, double a, double c);

struct AveragingStudy {
  std::vector<Vec2> points;
  double a = 0.0;
  double c = 1.0;
  std::vector<double> eps;
  Eigen::MatrixXd errors;          ///< points x eps, |I_eps - f(z)|
  std::vector<double> slopes;      ///< least-squares log-log slope per point
  double min_slope = 0.0;
  double max_error_smallest = 0.0;  ///< max over points at the smallest eps
  double worst_ratio = 0.0;         ///< max over points of err(smallest) / err(largest)
  bool monotone = false;            ///< errors decrease along eps at every point
  double threshold = 0.0;
  bool pass = false;
};

/// Pass iff min_slope >= 0.8 and max_error_smallest <= threshold.
AveragingStudy convergence_study(const SaturationFn& sigma, const ModifiedSaturation& s,
                                 const std::vector<Vec2>& z_set, const std::vector<double>& eps_seq,
                                 double a = 0.0, double c = 1.0, double threshold = 1e-2);

/// radii x angles points, angles evenly spaced from 0.
std::vector<Vec2> multiscale_points(const std::vector<double>& radii, int angles = 8);

/// Least-squares slope of log(err) against log(eps).
double log_log_slope(const std::vector<double>& eps, const std::vector<double>& err);

/// Columns zx, zy, eps, err.
void write_study_csv(const AveragingStudy& study, const std::filesystem::path& path);

}  // namespace cdistab
