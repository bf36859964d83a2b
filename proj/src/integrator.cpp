#include "cdistab/integrator.hpp"

#include <charconv>
#include <fstream>

namespace cdistab {

StepControl StepControl::fixed(double h) {
  StepControl c;
  c.mode = Mode::Fixed;
  c.h = h;
  c.validate();
  return c;
}

StepControl StepControl::adaptive(double rtol, double atol, double h_max) {
  StepControl c;
  c.mode = Mode::Adaptive;
  c.rtol = rtol;
  c.atol = atol;
  c.h_max = h_max;
  c.validate();
  return c;
}

StepControl StepControl::with_eps_cap(double eps) const {
  if (!(eps > 0.0)) throw DomainError("StepControl: eps cap must be positive");
  StepControl c = *this;
  c.eps_cap = eps;
  return c;
}

double StepControl::max_step() const {
  if (mode == Mode::Fixed) {
    return eps_cap ? std::min(h, *eps_cap / kFixedStepsPerPeriod) : h;
  }
  return eps_cap ? std::min(h_max, *eps_cap / kAdaptiveStepsPerPeriod) : h_max;
}

void StepControl::validate() const {
  if (mode == Mode::Fixed && !(h > 0.0)) throw UsageError("StepControl: h must be positive");
  if (mode == Mode::Adaptive && (!(rtol > 0.0) || !(atol > 0.0) || !(h_max > 0.0))) {
    throw UsageError("StepControl: rtol, atol and h_max must be positive");
  }
}

void Trajectory::push(double t, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (dim_ == 0 && times_.empty()) dim_ = static_cast<int>(x.size());
  if (x.size() != dim_) throw UsageError("Trajectory::push: state dimension mismatch");
  if (!times_.empty() && !(t > times_.back())) {
    throw UsageError("Trajectory::push: times must be strictly increasing");
  }
  times_.push_back(t);
  data_.insert(data_.end(), x.data(), x.data() + dim_);
}

Eigen::VectorXd Trajectory::state_at(double t) const {
  if (empty() || t < times_.front() || t > times_.back()) {
    throw RangeError("Trajectory::state_at: t = " + std::to_string(t) + " outside the sampled span");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) return back_state();
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return (1.0 - w) * state(i - 1) + w * state(i);
}

std::size_t Trajectory::nearest_index(double t) const {
  if (empty() || t < times_.front() || t > times_.back()) {
    throw RangeError("Trajectory::nearest_index: t = " + std::to_string(t) +
                     " outside the sampled span");
  }
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times_.begin());
  if (i > 0 && (i == size() || t - times_[i - 1] <= times_[i] - t)) --i;
  return i;
}

void Trajectory::set_channel(const std::string& name, std::vector<double> values) {
  if (values.size() != size()) throw UsageError("Trajectory::set_channel: length mismatch");
  channels_[name] = std::move(values);
}

const std::vector<double>& Trajectory::channel(const std::string& name) const {
  auto it = channels_.find(name);
  if (it == channels_.end()) throw UsageError("Trajectory: no channel '" + name + "'");
  return it->second;
}

namespace detail {

std::vector<double> sample_grid(double t0, double t1, double sample_dt) {
  std::vector<double> grid{t0};
  // Drop a grid point that would sit within a hair of t1.
  const double guard = 1e-9 * sample_dt;
  for (long k = 1;; ++k) {
    const double t = t0 + static_cast<double>(k) * sample_dt;
    if (t >= t1 - guard) break;
    grid.push_back(t);
  }
  if (t1 > t0) grid.push_back(t1);
  return grid;
}

}  // namespace detail

Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& x0, double t0, double t1,
                     StepControl control, double sample_dt, const StopPredicate& stop) {
  if (x0.size() != spec.dimension()) {
    throw UsageError("integrate: initial state has size " + std::to_string(x0.size()) +
                     ", system expects " + std::to_string(spec.dimension()));
  }
  if (spec.kind == SystemKind::TEps || spec.kind == SystemKind::SEps ||
      spec.kind == SystemKind::LinearAEps) {
    if (!control.eps_cap || *control.eps_cap > spec.eps) control = control.with_eps_cap(spec.eps);
  }
  if (spec.dimension() == 4 && spec.kind != SystemKind::Fn) {
    auto f = [&spec](double t, const Vec4& x) { return rhs4(spec, t, x); };
    return integrate<Vec4>(f, Vec4(x0), t0, t1, control, sample_dt, stop);
  }
  auto f = [&spec](double t, const Eigen::VectorXd& x) { return rhs(spec, t, x); };
  return integrate<Eigen::VectorXd>(f, x0, t0, t1, control, sample_dt, stop);
}

ResidualReport ode_residual(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                            const Trajectory& traj, int order) {
  if (order != 2 && order != 4) throw UsageError("ode_residual: order must be 2 or 4");
  const std::size_t reach = order == 2 ? 1 : 2;
  if (traj.size() < 2 * reach + 1) throw UsageError("ode_residual: too few samples");
  ResidualReport rep;
  bool any = false;
  for (std::size_t i = reach; i + reach < traj.size(); ++i) {
    const double h = traj.time(i + 1) - traj.time(i);
    bool uniform = true;
    for (std::size_t j = i - reach; j < i + reach; ++j) {
      const double hj = traj.time(j + 1) - traj.time(j);
      if (std::fabs(hj - h) > 1e-9 * h) uniform = false;
    }
    if (!uniform) continue;
    Eigen::VectorXd d;
    if (order == 2) {
      d = (traj.state(i + 1) - traj.state(i - 1)) / (2.0 * h);
    } else {
      d = (traj.state(i - 2) - 8.0 * traj.state(i - 1) + 8.0 * traj.state(i + 1) -
           traj.state(i + 2)) /
          (12.0 * h);
    }
    const double r = (d - f(traj.time(i), Eigen::VectorXd(traj.state(i)))).norm();
    if (!any || r > rep.max) {
      rep.max = r;
      rep.time = traj.time(i);
      rep.index = i;
      any = true;
    }
  }
  if (!any) throw UsageError("ode_residual: no uniformly spaced interior stencil");
  return rep;
}

ResidualReport ode_residual(const SystemSpec& spec, const Trajectory& traj, int order) {
  return ode_residual([&spec](double t, const Eigen::VectorXd& x) { return rhs(spec, t, x); },
                      traj, order);
}

Trajectory scale_trajectory(double eps, const Trajectory& traj) {
  if (!(eps > 0.0)) throw DomainError("scale_trajectory: eps must be positive");
  if (traj.dim() != 4) throw UsageError("scale_trajectory: needs a 4-dimensional trajectory");
  const Mat4 d = d_eps(eps);
  Trajectory out(4);
  for (std::size_t i = 0; i < traj.size(); ++i) out.push(eps * traj.time(i), d * traj.state(i));
  return out;
}

Trajectory scale_trajectory(double eps, const Trajectory& traj, const std::vector<double>& times) {
  if (!(eps > 0.0)) throw DomainError("scale_trajectory: eps must be positive");
  if (traj.dim() != 4) throw UsageError("scale_trajectory: needs a 4-dimensional trajectory");
  const Mat4 d = d_eps(eps);
  Trajectory out(4);
  for (double t : times) out.push(t, d * traj.state_at(t / eps));
  return out;
}

void add_diagnostic(Trajectory& traj, const std::string& name, const SampleEvaluator& fn) {
  std::vector<double> values(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    values[i] = fn(traj.time(i), Eigen::VectorXd(traj.state(i)));
  }
  traj.set_channel(name, std::move(values));
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("write_csv: cannot open " + path.string());
  out << "t";
  for (int j = 0; j < traj.dim(); ++j) {
    out << ',';
    if (static_cast<std::size_t>(j) < traj.state_names.size()) {
      out << traj.state_names[j];
    } else {
      out << 'x' << j;
    }
  }
  for (const auto& [name, values] : traj.channels()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_number(traj.time(i));
    const auto x = traj.state(i);
    for (int j = 0; j < traj.dim(); ++j) out << ',' << format_number(x(j));
    for (const auto& [name, values] : traj.channels()) out << ',' << format_number(values[i]);
    out << '\n';
  }
}

}  // namespace cdistab
