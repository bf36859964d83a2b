#pragma once

// Planar rotations, the block matrices of the complex double integrator and
// the state containers shared by every system.

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cdistab/errors.hpp"

namespace cdistab {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;
using Vec4 = Vector4<double>;
using Mat4 = Matrix4<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// R_theta = [[cos, -sin], [sin, cos]].
template <typename Scalar>
Matrix2<Scalar> rotation(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(theta);
  const Scalar s = sin(theta);
  Matrix2<Scalar> r;
  r << c, -s, s, c;
  return r;
}

/// A0 = R_{pi/2}, the generator of planar rotations.
template <typename Scalar = double>
Matrix2<Scalar> a0() {
  Matrix2<Scalar> m;
  m << Scalar(0), Scalar(-1), Scalar(1), Scalar(0);
  return m;
}

/// v^perp = A0 v.
template <typename Derived>
Vector2<typename Derived::Scalar> perp(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 2);
  return Vector2<typename Derived::Scalar>(-v(1), v(0));
}

/// Reduces an angle into [0, 2pi).
inline double normalize_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a value just below a multiple of 2pi can round up to 2pi itself.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Angle theta in [0, 2pi) with v = |v| R_theta e1.
template <typename Derived>
double angle_of(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 2);
  if (v(0) == 0.0 && v(1) == 0.0) {
    throw DomainError("angle_of: zero vector has no angle");
  }
  return normalize_angle(std::atan2(v(1), v(0)));
}

/// J2(omega) = omega (I2 (x) A0) + J2c, i.e. [[omega A0, I2], [0, omega A0]].
/// omega = 0 gives the nilpotent block J2c.
template <typename Scalar>
Matrix4<Scalar> j2_omega(Scalar omega) {
  if (!(omega >= Scalar(0))) {
    throw DomainError("j2_omega: omega must be non-negative");
  }
  Matrix4<Scalar> m = Matrix4<Scalar>::Zero();
  m.template block<2, 2>(0, 0) = omega * a0<Scalar>();
  m.template block<2, 2>(2, 2) = omega * a0<Scalar>();
  m.template block<2, 2>(0, 2) = Matrix2<Scalar>::Identity();
  return m;
}

/// D_eps = diag(eps^2, eps^2, eps, eps).
template <typename Scalar>
Matrix4<Scalar> d_eps(Scalar eps) {
  if (!(eps > Scalar(0))) {
    throw DomainError("d_eps: eps must be positive");
  }
  return Vector4<Scalar>(eps * eps, eps * eps, eps, eps).asDiagonal();
}

/// Which pair of planar coordinates a 4-state carries.
enum class Coords {
  XY,  ///< (x1, x2): the S_1 / S_eps / CDI frame
  ZY,  ///< (z, y): the T_eps / T_0 frame
};

/// A point of R^4 split into two planar halves with an explicit coordinate tag.
struct State4 {
  Vec2 first = Vec2::Zero();
  Vec2 second = Vec2::Zero();
  Coords coords = Coords::XY;

  static State4 xy(const Vec2& x1, const Vec2& x2) { return {x1, x2, Coords::XY}; }
  static State4 zy(const Vec2& z, const Vec2& y) { return {z, y, Coords::ZY}; }
  static State4 from_stacked(const Vec4& v, Coords c) {
    return {v.head<2>(), v.tail<2>(), c};
  }

  Vec4 stacked() const {
    Vec4 v;
    v << first, second;
    return v;
  }
};

}  // namespace cdistab
