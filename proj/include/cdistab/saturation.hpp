#pragma once

// Scalar saturation functions: odd, bounded, globally Lipschitz, non-decreasing
// with a derivative that is non-increasing on the positive half-line.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cdistab {

enum class SaturationKind { Standard, Tanh, Arctan, Custom };

std::string to_string(SaturationKind kind);
SaturationKind saturation_kind_from_string(const std::string& name);

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of tabulated samples.
/// Held constant beyond both ends of the table.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double derivative(double x) const;
  /// Integral from 0 (or the clamped left end) to x.
  double integral(double x) const;

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t cell(double x) const;
  double integral_from_left(double x) const;

  std::vector<double> x_, y_, d_;
  std::vector<double> cumulative_;  // integral from x_[0] to x_[i]
  double integral_at_zero_ = 0.0;
};

/// sigma(xi) = base(k1 xi) / k2 for a built-in base or a tabulated one.
///
/// Built-ins: the standard saturation xi / max(1, |xi|), tanh and arctan.
/// Custom tables either start at xi = 0 (extended to negative xi by oddness)
/// or cover both signs explicitly.
class SaturationFn {
 public:
  static SaturationFn standard();
  static SaturationFn tanh();
  static SaturationFn arctan();
  static SaturationFn from_table(std::vector<double> xi, std::vector<double> sigma);
  /// Two-column CSV "xi,sigma" with a header row and strictly increasing xi.
  static SaturationFn load_csv(const std::filesystem::path& path);

  /// Returns u -> sigma(a u) / c.
  SaturationFn scaled(double a, double c) const;
  /// Rescaled copy with sigma_inf = sigma'(0) = 1.
  SaturationFn normalized() const;

  double operator()(double xi) const { return value(xi); }
  double value(double xi) const;
  /// Derivative; at the kinks of the standard saturation the flat side is used.
  double derivative(double xi) const;
  /// Sigma(xi) = integral of sigma over [0, xi].
  double antiderivative(double xi) const;

  double sigma_inf() const;
  double sigma_prime_0() const;

  /// Positive inputs where sigma' is discontinuous.
  std::vector<double> breakpoints() const;
  /// Input length over which sigma leaves its linear zone.
  double input_scale() const { return 1.0 / k1_; }

  SaturationKind kind() const { return kind_; }
  double k1() const { return k1_; }
  double k2() const { return k2_; }
  std::string name() const { return to_string(kind_); }
  const MonotoneCubic* table() const { return table_.get(); }

 private:
  SaturationFn(SaturationKind kind, std::shared_ptr<const MonotoneCubic> table)
      : kind_(kind), table_(std::move(table)) {}

  double base_value(double u) const;
  double base_derivative(double u) const;
  double base_antiderivative(double u) const;
  double base_inf() const;
  double base_prime_0() const;

  SaturationKind kind_;
  double k1_ = 1.0;
  double k2_ = 1.0;
  bool odd_extension_ = false;
  std::shared_ptr<const MonotoneCubic> table_;
};

inline double sigma_eval(const SaturationFn& f, double xi) { return f.value(xi); }
inline double sigma_prime(const SaturationFn& f, double xi) { return f.derivative(xi); }
inline double sigma_antideriv(const SaturationFn& f, double xi) { return f.antiderivative(xi); }

/// Grid on [-half_width, half_width]; points is the total count (odd, symmetric).
struct GridSpec {
  double half_width = 100.0;
  int points = 10001;
};

/// What validate_saturation needs from a candidate; built-ins and the modified
/// saturation both provide one.
struct SaturationProbe {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> antiderivative;
  double sigma_inf = 1.0;
  double sigma_prime_0 = 1.0;
};

SaturationProbe make_probe(const SaturationFn& f);

struct AxiomCheck {
  std::string item;  ///< "s1.odd", "s2.sign", "c3.xi0", ...
  bool pass = false;
  double measured = 0.0;
};

struct ValidationReport {
  std::string function;
  std::vector<AxiomCheck> checks;
  double lipschitz = 0.0;  ///< largest difference quotient on the grid
  /// Supremum estimate of the half-width on which sigma' >= sigma'(0)/2: the
  /// first positive grid point where it fails, or half_width if none does.
  double xi0 = 0.0;

  bool pass() const;
  const AxiomCheck* find(const std::string& item) const;
  /// True iff every check whose item starts with prefix passes.
  bool group_pass(const std::string& prefix) const;
};

ValidationReport validate_saturation(const SaturationProbe& probe, const GridSpec& grid = {});
inline ValidationReport validate_saturation(const SaturationFn& f, const GridSpec& grid = {}) {
  return validate_saturation(make_probe(f), grid);
}

}  // namespace cdistab
