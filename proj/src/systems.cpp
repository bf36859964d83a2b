#include "cdistab/systems.hpp"

#include <algorithm>
#include <cmath>

#include "cdistab/errors.hpp"

namespace cdistab {

namespace {

const char* kind_names[] = {"cdi", "s1", "s_eps", "t_eps", "t0", "di", "fn", "a_eps"};

void require_positive_eps(double eps, const char* who) {
  if (!(eps > 0.0)) throw DomainError(std::string(who) + ": eps must be positive");
}

// J2(omega) x.
Vec4 drift(double omega, const Vec4& x) {
  Vec4 out;
  out.head<2>() = omega * perp(x.head<2>()) + x.tail<2>();
  out.tail<2>() = omega * perp(x.tail<2>());
  return out;
}

}  // namespace

std::string to_string(SystemKind kind) { return kind_names[static_cast<int>(kind)]; }

SystemKind system_kind_from_string(const std::string& name) {
  for (int i = 0; i < 8; ++i) {
    if (name == kind_names[i]) return static_cast<SystemKind>(i);
  }
  throw UsageError("unknown system kind '" + name + "'");
}

SystemSpec SystemSpec::cdi(double omega, const Vec2& b1, const Vec2& b2, const Vec4& k,
                           SaturationFn sigma) {
  if (!(omega >= 0.0)) throw DomainError("SystemSpec::cdi: omega must be non-negative");
  if (b2.squaredNorm() == 0.0) {
    throw NotControllableError("SystemSpec::cdi: b2 must be non-zero");
  }
  SystemSpec s;
  s.kind = SystemKind::CDI;
  s.omega = omega;
  s.b1 = b1;
  s.b2 = b2;
  s.gain = k;
  s.sigma = std::make_shared<const SaturationFn>(std::move(sigma));
  return s;
}

SystemSpec SystemSpec::s1(const Vec4& k, SaturationFn sigma) {
  SystemSpec s;
  s.kind = SystemKind::S1;
  s.gain = k;
  s.sigma = std::make_shared<const SaturationFn>(std::move(sigma));
  return s;
}

SystemSpec SystemSpec::s_eps(double eps, const Vec4& k_eps, SaturationFn sigma) {
  require_positive_eps(eps, "SystemSpec::s_eps");
  SystemSpec s;
  s.kind = SystemKind::SEps;
  s.eps = eps;
  s.omega = kTwoPi / eps;
  s.gain = k_eps;
  s.sigma = std::make_shared<const SaturationFn>(std::move(sigma));
  return s;
}

SystemSpec SystemSpec::t_eps(double eps, SaturationFn sigma) {
  require_positive_eps(eps, "SystemSpec::t_eps");
  SystemSpec s;
  s.kind = SystemKind::TEps;
  s.eps = eps;
  s.sigma = std::make_shared<const SaturationFn>(std::move(sigma));
  return s;
}

SystemSpec SystemSpec::t0(std::shared_ptr<const ModifiedSaturation> ms) {
  if (!ms) throw UsageError("SystemSpec::t0: modified saturation required");
  SystemSpec s;
  s.kind = SystemKind::T0;
  s.sigma = std::make_shared<const SaturationFn>(ms->sigma());
  s.mod_sat = std::move(ms);
  return s;
}

SystemSpec SystemSpec::di(SaturationFn sigma) {
  SystemSpec s;
  s.kind = SystemKind::DI;
  s.n = 1;
  s.sigma = std::make_shared<const SaturationFn>(std::move(sigma));
  return s;
}

SystemSpec SystemSpec::fn(int n, std::shared_ptr<const ModifiedSaturation> ms) {
  if (n < 1) throw DomainError("SystemSpec::fn: n must be at least 1");
  if (!ms) throw UsageError("SystemSpec::fn: modified saturation required");
  SystemSpec s;
  s.kind = SystemKind::Fn;
  s.n = n;
  s.sigma = std::make_shared<const SaturationFn>(ms->sigma());
  s.mod_sat = std::move(ms);
  return s;
}

SystemSpec SystemSpec::linear_a_eps(double eps) {
  require_positive_eps(eps, "SystemSpec::linear_a_eps");
  SystemSpec s;
  s.kind = SystemKind::LinearAEps;
  s.eps = eps;
  s.omega = kTwoPi / eps;
  return s;
}

Coords SystemSpec::coords() const {
  switch (kind) {
    case SystemKind::TEps:
    case SystemKind::T0:
    case SystemKind::Fn:
    case SystemKind::DI: return Coords::ZY;
    default: return Coords::XY;
  }
}

int SystemSpec::dimension() const {
  switch (kind) {
    case SystemKind::DI: return 2;
    case SystemKind::Fn: return 2 * n;
    default: return 4;
  }
}

Vec2 b_eps(double t, double eps) {
  const double theta = -kTwoPi * t / eps;
  return Vec2(-std::sin(theta), std::cos(theta));
}

Vec4 rhs4(const SystemSpec& spec, double t, const Vec4& x) {
  switch (spec.kind) {
    case SystemKind::CDI: {
      const double u = (*spec.sigma)(spec.gain.dot(x));
      Vec4 out = drift(spec.omega, x);
      out.head<2>() -= spec.b1 * u;
      out.tail<2>() -= spec.b2 * u;
      return out;
    }
    case SystemKind::S1: {
      Vec4 out = drift(kTwoPi, x);
      out(3) -= (*spec.sigma)(spec.gain.dot(x));
      return out;
    }
    case SystemKind::SEps: {
      Vec4 out = drift(spec.omega, x);
      out(3) -= (*spec.sigma)(spec.gain.dot(x));
      return out;
    }
    case SystemKind::TEps: {
      const Vec2 b = b_eps(t, spec.eps);
      const Vec2 g = b * (*spec.sigma)(b.dot(x.head<2>()));
      Vec4 out;
      out << x.tail<2>() - g, -g;
      return out;
    }
    case SystemKind::T0: {
      const Vec2 f = averaged_field(*spec.mod_sat, x.head<2>());
      Vec4 out;
      out << x.tail<2>() - f, -f;
      return out;
    }
    case SystemKind::Fn:
      if (spec.n == 2) {
        const Vec2 f = averaged_field(*spec.mod_sat, x.head<2>());
        Vec4 out;
        out << x.tail<2>() - f, -f;
        return out;
      }
      break;
    case SystemKind::LinearAEps: {
      Vec4 out = drift(spec.omega, x);
      out(3) -= x(3);
      return out;
    }
    case SystemKind::DI: break;
  }
  throw UsageError("rhs4: system '" + to_string(spec.kind) + "' is not 4-dimensional");
}

State4 rhs(const SystemSpec& spec, double t, const State4& state) {
  if (spec.dimension() != 4) {
    throw UsageError("rhs: system '" + to_string(spec.kind) + "' does not act on State4");
  }
  if (state.coords != spec.coords()) {
    throw UsageError("rhs: coordinate tag does not match system '" + to_string(spec.kind) + "'");
  }
  return State4::from_stacked(rhs4(spec, t, state.stacked()), state.coords);
}

Eigen::VectorXd rhs(const SystemSpec& spec, double t, const Eigen::VectorXd& x) {
  const int dim = spec.dimension();
  if (x.size() != dim) {
    throw UsageError("rhs: state has size " + std::to_string(x.size()) + ", system expects " +
                     std::to_string(dim));
  }
  if (dim == 4 && spec.kind != SystemKind::Fn) return rhs4(spec, t, Vec4(x));
  Eigen::VectorXd out(dim);
  if (spec.kind == SystemKind::DI) {
    const double s = (*spec.sigma)(x(0));
    out << x(1) - s, -s;
    return out;
  }
  // Fn: for n = 1 the direction z / |z| is sign(z), and ratio() covers z = 0.
  const int n = spec.n;
  const Eigen::VectorXd f = spec.mod_sat->ratio(x.head(n).norm()) * x.head(n);
  out.head(n) = x.tail(n) - f;
  out.tail(n) = -f;
  return out;
}

Mat2 averaged_field_jacobian(const ModifiedSaturation& s, const Vec2& z) {
  const double r = z.norm();
  if (r == 0.0) return s.s_prime_0() * Mat2::Identity();
  const Vec2 u = z / r;
  const Mat2 radial = u * u.transpose();
  return s.derivative(r) * radial + s.ratio(r) * (Mat2::Identity() - radial);
}

double monotonicity_gap(const ModifiedSaturation& s, const Vec2& z, const Vec2& y) {
  return y.dot(averaged_field(s, z + y) - averaged_field(s, z));
}

FeedbackGain feedback_gain(double eps) {
  require_positive_eps(eps, "feedback_gain");
  FeedbackGain g;
  g.eps = eps;
  g.k_eps << 0.0, 1.0, 0.0, 1.0;
  g.k = d_eps(eps) * g.k_eps;
  return g;
}

State4 s_to_t(double t, double eps, const State4& x) {
  require_positive_eps(eps, "s_to_t");
  if (x.coords != Coords::XY) throw UsageError("s_to_t: expects (x1, x2) coordinates");
  const Mat2 r = rotation(-kTwoPi * t / eps);
  const Vec2 y1 = r * x.first;
  const Vec2 y2 = r * x.second;
  return State4::zy(y1 + y2, y2);
}

State4 t_to_s(double t, double eps, const State4& zy) {
  require_positive_eps(eps, "t_to_s");
  if (zy.coords != Coords::ZY) throw UsageError("t_to_s: expects (z, y) coordinates");
  const Mat2 back = rotation(kTwoPi * t / eps);
  return State4::xy(back * (zy.first - zy.second), back * zy.second);
}

Mat4 a_eps_matrix(double eps) {
  require_positive_eps(eps, "a_eps_matrix");
  Mat4 m = j2_omega(kTwoPi / eps);
  m(3, 3) -= 1.0;
  return m;
}

Mat4 closed_loop_matrix(double eps, const Vec4& k_eps) {
  require_positive_eps(eps, "closed_loop_matrix");
  Mat4 m = j2_omega(kTwoPi / eps);
  m.row(3) -= k_eps.transpose();
  return m;
}

double spectral_abscissa(const Mat2& m) {
  const double half_trace = 0.5 * m.trace();
  const double disc = half_trace * half_trace - m.determinant();
  if (disc <= 0.0) return half_trace;
  const double root = std::sqrt(disc);
  return half_trace >= 0.0 ? half_trace + root : m.determinant() / (half_trace - root);
}

double spectral_abscissa(const Mat4& m) {
  if (m.block<2, 2>(2, 0).isZero(0.0)) {
    // Block triangular: the spectrum is the union of the diagonal blocks,
    // which keeps defective cases such as J2(omega) exact.
    return std::max(spectral_abscissa(Mat2(m.block<2, 2>(0, 0))),
                    spectral_abscissa(Mat2(m.block<2, 2>(2, 2))));
  }
  Eigen::EigenSolver<Mat4> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral_abscissa: eigenvalue iteration did not converge", 0.0);
  }
  return solver.eigenvalues().real().maxCoeff();
}

Mat2 t0_linearization_block(double s_prime_0) {
  Mat2 m;
  m << -s_prime_0, 1.0, -s_prime_0, 0.0;
  return m;
}

}  // namespace cdistab
