#pragma once

// Fixed-step RK4 and adaptive Dormand-Prince 4(5) with sampling on a uniform
// time grid. Sample times are t0 + k * sample_dt (never accumulated), plus t1.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "cdistab/errors.hpp"
#include "cdistab/systems.hpp"

namespace cdistab {

struct StepControl {
  enum class Mode { Fixed, Adaptive };

  Mode mode = Mode::Fixed;
  double h = 1e-3;
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_max = 0.1;
  /// Period of a fast rotation the step must resolve.
  std::optional<double> eps_cap;

  static StepControl fixed(double h);
  static StepControl adaptive(double rtol, double atol, double h_max);
  StepControl with_eps_cap(double eps) const;

  /// Fixed mode: min(h, eps / 200). Adaptive mode: min(h_max, eps / 20).
  double max_step() const;
  void validate() const;
};

inline constexpr double kFixedStepsPerPeriod = 200.0;
inline constexpr double kAdaptiveStepsPerPeriod = 20.0;
inline constexpr double kDivergenceNorm = 1e12;

/// Sampled solution: strictly increasing times, flat row-major states and
/// named per-sample diagnostic channels.
class Trajectory {
 public:
  explicit Trajectory(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  void push(double t, const Eigen::Ref<const Eigen::VectorXd>& x);

  double time(std::size_t i) const { return times_[i]; }
  double front_time() const { return times_.front(); }
  double back_time() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  Eigen::Map<const Eigen::VectorXd> state(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + i * dim_, dim_);
  }
  Eigen::Map<const Eigen::VectorXd> back_state() const { return state(size() - 1); }

  /// Linear interpolation between samples; RangeError outside the span.
  Eigen::VectorXd state_at(double t) const;
  /// Index of the sample closest to t; RangeError outside the span.
  std::size_t nearest_index(double t) const;

  void set_channel(const std::string& name, std::vector<double> values);
  bool has_channel(const std::string& name) const { return channels_.count(name) != 0; }
  const std::vector<double>& channel(const std::string& name) const;
  const std::map<std::string, std::vector<double>>& channels() const { return channels_; }

  /// Column labels used by write_csv; defaults to x0, x1, ...
  std::vector<std::string> state_names;

  long steps = 0;
  long rejected_steps = 0;
  double largest_step = 0.0;

 private:
  int dim_;
  std::vector<double> times_;
  std::vector<double> data_;
  std::map<std::string, std::vector<double>> channels_;
};

/// Thrown when the state norm exceeds kDivergenceNorm or turns non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_time, Trajectory partial)
      : std::runtime_error(what), last_time_(last_time), partial_(std::move(partial)) {}

  double last_time() const { return last_time_; }
  const Trajectory& partial() const { return partial_; }

 private:
  double last_time_;
  Trajectory partial_;
};

using StopPredicate = std::function<bool(double, const Eigen::VectorXd&)>;

namespace detail {

std::vector<double> sample_grid(double t0, double t1, double sample_dt);

template <typename Vector>
bool diverged(const Vector& x) {
  return !x.allFinite() || x.norm() > kDivergenceNorm;
}

template <typename Vector>
[[noreturn]] void throw_divergence(double t, Trajectory& traj) {
  const double last = traj.empty() ? t : traj.back_time();
  throw DivergenceError("integrate: state norm exceeded " + std::to_string(kDivergenceNorm) +
                            " after t = " + std::to_string(t),
                        last, std::move(traj));
}

template <typename Vector, typename Rhs>
Vector rk4_step(Rhs& f, double t, const Vector& x, double h) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * h, Vector(x + 0.5 * h * k1));
  const Vector k3 = f(t + 0.5 * h, Vector(x + 0.5 * h * k2));
  const Vector k4 = f(t + h, Vector(x + h * k3));
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

/// Integrates x' = f(t, x) on [t0, t1]. Vector is a fixed or dynamic Eigen
/// column vector; f returns the same type.
template <typename Vector, typename Rhs>
  requires std::is_invocable_v<Rhs&, double, const Vector&>
Trajectory integrate(Rhs&& f, const Vector& x0, double t0, double t1, const StepControl& control,
                     double sample_dt, const StopPredicate& stop = {}) {
  control.validate();
  if (!(sample_dt > 0.0)) throw UsageError("integrate: sample_dt must be positive");
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 >= t0)) {
    throw UsageError("integrate: need finite t0 <= t1");
  }
  const std::vector<double> grid = detail::sample_grid(t0, t1, sample_dt);
  const double h_cap = control.max_step();

  Trajectory traj(static_cast<int>(x0.size()));
  Vector x = x0;
  if (detail::diverged(x)) detail::throw_divergence<Vector>(t0, traj);
  traj.push(t0, x);
  if (stop && stop(t0, Eigen::VectorXd(x))) return traj;

  if (control.mode == StepControl::Mode::Fixed) {
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double a = grid[k - 1];
      const double span = grid[k] - a;
      const auto m = static_cast<long>(std::ceil(span / h_cap * (1.0 - 1e-12)));
      const double h = span / static_cast<double>(std::max(m, 1L));
      for (long j = 0; j < std::max(m, 1L); ++j) {
        x = detail::rk4_step<Vector>(f, a + static_cast<double>(j) * h, x, h);
        if (detail::diverged(x)) detail::throw_divergence<Vector>(a + (j + 1) * h, traj);
      }
      traj.steps += std::max(m, 1L);
      traj.largest_step = std::max(traj.largest_step, h);
      traj.push(grid[k], x);
      if (stop && stop(grid[k], Eigen::VectorXd(x))) break;
    }
    return traj;
  }

  using namespace detail;
  const double rtol = control.rtol;
  const double atol = control.atol;
  double h = std::min(h_cap, grid.size() > 1 ? grid[1] - grid[0] : h_cap);
  double t = t0;
  Vector k1 = f(t, x);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double target = grid[k];
    while (t < target) {
      bool last = false;
      double step = std::min(h, h_cap);
      if (t + step >= target) {
        step = target - t;
        last = true;
      }
      const Vector k2 = f(t + c2 * step, Vector(x + step * (a21 * k1)));
      const Vector k3 = f(t + c3 * step, Vector(x + step * (a31 * k1 + a32 * k2)));
      const Vector k4 = f(t + c4 * step, Vector(x + step * (a41 * k1 + a42 * k2 + a43 * k3)));
      const Vector k5 =
          f(t + c5 * step, Vector(x + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
      const Vector k6 = f(t + step, Vector(x + step * (a61 * k1 + a62 * k2 + a63 * k3 +
                                                       a64 * k4 + a65 * k5)));
      const Vector x_new =
          x + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vector k7 = f(t + step, x_new);
      const Vector err =
          step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double norm = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = atol + rtol * std::max(std::fabs(x(i)), std::fabs(x_new(i)));
        norm = std::max(norm, std::fabs(err(i)) / scale);
      }
      if (!std::isfinite(norm)) norm = 1e10;
      const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      if (norm <= 1.0) {
        t = last ? target : t + step;
        x = x_new;
        k1 = k7;
        ++traj.steps;
        traj.largest_step = std::max(traj.largest_step, step);
        if (diverged(x)) throw_divergence<Vector>(t, traj);
        // A step shortened to land on a sample says nothing about the next one.
        if (!last) h = step * factor;
      } else {
        ++traj.rejected_steps;
        h = step * std::max(factor, 0.1);
        if (h < 1e-14 * std::max(1.0, std::fabs(t))) {
          throw NumericError("integrate: adaptive step size underflow at t = " + std::to_string(t),
                             norm);
        }
      }
    }
    traj.push(target, x);
    if (stop && stop(target, Eigen::VectorXd(x))) break;
  }
  return traj;
}

/// Integrates a SystemSpec; 4-dimensional kinds take the fixed-size path.
/// When the system carries an eps the step cap follows it automatically.
Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& x0, double t0, double t1,
                     StepControl control, double sample_dt, const StopPredicate& stop = {});

struct ResidualReport {
  double max = 0.0;   ///< max over interior samples of |difference derivative - rhs|
  double time = 0.0;  ///< where it is attained
  std::size_t index = 0;
};

/// order 2: central three-point difference; order 4: five-point stencil.
/// Samples whose stencil is not uniformly spaced are skipped.
ResidualReport ode_residual(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                            const Trajectory& traj, int order = 2);
ResidualReport ode_residual(const SystemSpec& spec, const Trajectory& traj, int order = 2);

/// x_eps(t) = D_eps x(t / eps) at every sample of an S1 trajectory (times scaled by eps).
Trajectory scale_trajectory(double eps, const Trajectory& traj);
/// Same, resampled by linear interpolation at the given S_eps times.
Trajectory scale_trajectory(double eps, const Trajectory& traj, const std::vector<double>& times);

using SampleEvaluator = std::function<double(double, const Eigen::VectorXd&)>;

/// Adds a diagnostic channel by evaluating fn at every sample.
void add_diagnostic(Trajectory& traj, const std::string& name, const SampleEvaluator& fn);

/// Header "t,<state columns>,<diagnostic columns>", shortest round-trip numbers.
void write_csv(const Trajectory& traj, const std::filesystem::path& path);
std::string format_number(double v);

/// Applies fn to 0..n-1 on up to `workers` threads; results keep index order.
/// The first exception by index is rethrown after all workers finish.
template <typename F>
auto parallel_map(std::size_t n, F&& fn, unsigned workers = 0)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace cdistab
