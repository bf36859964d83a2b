#pragma once

// The modified saturation S, the radial average of sigma over one rotation:
//
//   S(xi) = (2/pi) * integral_0^{pi/2} sin(v) sigma(xi sin v) dv.
//
// S is itself a C^1 saturation function. Its large-argument limit is
// (2/pi) sigma_inf, measured here by quadrature rather than assumed.

#include <span>
#include <vector>

#include "cdistab/saturation.hpp"

namespace cdistab {

struct ModSatOptions {
  double abs_tol = 1e-10;         ///< quadrature tolerance for direct evaluations
  double max_spacing = 1e-2;      ///< base node spacing near the origin; grows linearly far out
  double table_radius = 65536.0;  ///< table covers [0, table_radius]; quadrature beyond
  double cell_tol = 1e-9;         ///< midpoint interpolation error accepted per cell
  double slope_tol = 1e-8;        ///< same for the interpolated slope
  int max_refinement = 24;
};

/// Immutable after construction: the S / S' table is built eagerly and every
/// evaluation is read-only.
///
/// value(), derivative() and antiderivative() go through a piecewise cubic
/// Hermite table whose node values and slopes are exact quadratures, so the
/// three are mutually consistent (derivative is the slope of value, the
/// antiderivative integrates value exactly). exact_*() are direct quadratures.
/// Within about 1e-6 input scales of a kink of sigma, derivative() falls back
/// to quadrature because S' has a square-root cusp there.
class ModifiedSaturation {
 public:
  explicit ModifiedSaturation(SaturationFn sigma, ModSatOptions options = {});

  const SaturationFn& sigma() const { return sigma_; }
  const ModSatOptions& options() const { return options_; }

  double value(double xi) const;
  double derivative(double xi) const;
  /// Integral of S over [0, r]; even in r.
  double antiderivative(double r) const;

  double exact_value(double xi) const;
  double exact_derivative(double xi) const;
  /// S' through the divided-difference kernel weighted by h_weight; xi != 0.
  double exact_derivative_alt(double xi) const;

  /// S(xi) / xi, continuous at 0 with value S'(0).
  double ratio(double xi) const;

  double s_inf() const { return s_inf_; }
  double s_prime_0() const { return s_prime_0_; }
  std::size_t table_size() const { return nodes_.size(); }
  double table_radius() const { return nodes_.back(); }

 private:
  template <typename Kernel>
  double integrate_kernel(Kernel&& kernel, double xi, const char* what) const;
  void build_table();
  std::size_t cell(double r) const;

  SaturationFn sigma_;
  ModSatOptions options_;
  std::vector<double> nodes_, values_, slopes_, cumulative_;
  std::vector<char> exact_slope_;
  double s_inf_ = 0.0;
  double s_prime_0_ = 0.0;
};

/// h(v) = ((1 - sin v) / cos^2 v) sin v (1 + cos^2 v) on [0, pi/2), h(pi/2) = 1/2.
double h_weight(double v);

double mod_sat_eval(const ModifiedSaturation& s, double xi);
double mod_sat_prime(const ModifiedSaturation& s, double xi);
double mod_sat_prime_alt(const ModifiedSaturation& s, double xi);
double mod_sat_antideriv(const ModifiedSaturation& s, double r);

struct ScalingBoundReport {
  double c2 = 0.0;  ///< inf of M^3 S'(M xi) / S'(xi) over the grids
  bool pass = false;
  double argmin_xi = 0.0;
  double argmin_m = 0.0;
  std::vector<double> m_values;
  std::vector<double> min_ratio_per_m;
};

ScalingBoundReport check_scaling_bound(const ModifiedSaturation& s, std::span<const double> xi_grid,
                                       std::span<const double> m_grid);

SaturationProbe make_probe(const ModifiedSaturation& s);

}  // namespace cdistab
