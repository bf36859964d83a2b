#pragma once

// Right-hand sides of every system in the construction, the coordinate maps
// between them, the explicit feedback and small eigenvalue utilities.
//
//   CDI     x' = J2(omega) x - b sigma(K^T x)
//   S1      x' = J2(2 pi) x - (0, e2) sigma(K^T x)
//   S_eps   x' = J2(2 pi / eps) x - (0, e2) sigma(K_eps^T x)
//   T_eps   z' = y - b_eps sigma(b_eps^T z),  y' = -b_eps sigma(b_eps^T z)
//   T0      z' = y - f(z),                    y' = -f(z)
//   DI      z' = y - sigma(z),                y' = -sigma(z)        (scalar)
//   Fn      T0 with z, y in R^n
//   A_eps   x' = (J2(2 pi / eps) - b b^T) x

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "cdistab/geometry.hpp"
#include "cdistab/modified_saturation.hpp"
#include "cdistab/saturation.hpp"

namespace cdistab {

enum class SystemKind { CDI, S1, SEps, TEps, T0, DI, Fn, LinearAEps };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

struct SystemSpec {
  SystemKind kind = SystemKind::T0;
  double eps = 1.0;
  double omega = kTwoPi;
  Vec2 b1 = Vec2::Zero();
  Vec2 b2 = Vec2(0.0, 1.0);
  Vec4 gain = Vec4::Zero();  ///< K for CDI and S1, K_eps for S_eps
  int n = 2;
  std::shared_ptr<const SaturationFn> sigma;
  std::shared_ptr<const ModifiedSaturation> mod_sat;

  static SystemSpec cdi(double omega, const Vec2& b1, const Vec2& b2, const Vec4& k,
                        SaturationFn sigma);
  static SystemSpec s1(const Vec4& k, SaturationFn sigma);
  static SystemSpec s_eps(double eps, const Vec4& k_eps, SaturationFn sigma);
  static SystemSpec t_eps(double eps, SaturationFn sigma);
  static SystemSpec t0(std::shared_ptr<const ModifiedSaturation> s);
  static SystemSpec di(SaturationFn sigma);
  static SystemSpec fn(int n, std::shared_ptr<const ModifiedSaturation> s);
  static SystemSpec linear_a_eps(double eps);

  Coords coords() const;
  int dimension() const;
  bool autonomous() const { return kind != SystemKind::TEps; }
};

/// b_eps(t) = R_{-2 pi t / eps} e2.
Vec2 b_eps(double t, double eps);

/// Right-hand side on a tagged 4-state; throws UsageError if the tag does not
/// match the system.
State4 rhs(const SystemSpec& spec, double t, const State4& state);
/// Untagged fast path for the 4-dimensional kinds.
Vec4 rhs4(const SystemSpec& spec, double t, const Vec4& x);
/// Any kind, state of size spec.dimension().
Eigen::VectorXd rhs(const SystemSpec& spec, double t, const Eigen::VectorXd& x);

/// f(z) = S(|z|) z / |z|, for z in R^n.
template <typename Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, 1> averaged_field(
    const ModifiedSaturation& s, const Eigen::MatrixBase<Derived>& z) {
  return s.ratio(z.norm()) * z;
}

/// df(z) = S'(r) z z^T / r^2 + (S(r) / r) (I - z z^T / r^2), r = |z|.
Mat2 averaged_field_jacobian(const ModifiedSaturation& s, const Vec2& z);

/// y^T (f(z + y) - f(z)).
double monotonicity_gap(const ModifiedSaturation& s, const Vec2& z, const Vec2& y);

struct FeedbackGain {
  Vec4 k;      ///< S1 frame: D_eps K_eps = (0, eps^2, 0, eps)
  Vec4 k_eps;  ///< S_eps frame: (e2; e2)
  double eps = 1.0;
};

FeedbackGain feedback_gain(double eps);

/// (x1, x2) -> (z, y): rotate both halves by R_{-2 pi t / eps}, then
/// z = y1 + y2, y = y2.
State4 s_to_t(double t, double eps, const State4& x);
State4 t_to_s(double t, double eps, const State4& zy);

/// The printed endgame matrix J2(2 pi / eps) - b b^T with b = (0, e2).
Mat4 a_eps_matrix(double eps);
/// Linear part of S_eps under K_eps = (e2; e2): J2(2 pi / eps) - b K_eps^T.
Mat4 closed_loop_matrix(double eps, const Vec4& k_eps);

/// Largest real part of the eigenvalues. Exact for 2x2 and for 4x4 matrices
/// that are block upper triangular in 2x2 blocks; otherwise Eigen's real
/// Schur based solver.
double spectral_abscissa(const Mat2& m);
double spectral_abscissa(const Mat4& m);

/// Linearization of T0 at the origin on one planar component.
Mat2 t0_linearization_block(double s_prime_0);

}  // namespace cdistab
