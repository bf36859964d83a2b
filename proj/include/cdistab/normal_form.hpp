#pragma once

// Linear change of variables and time rescaling taking a controllable CDI
//   x' = J2(omega) x - b sigma(u),  b = (b1, b2), b2 != 0
// to the normal form
//   X' = J2(2 pi) X - (0, e2) sigma~(u~),  sigma~ normalized.
//
// With P = alpha U1 solving P b2 = b1 and Q = beta U2 sending b2 to the e2 axis,
//   X(tau) = T x(c tau),  T = [[Q, -Q P], [0, c Q]],  c = 2 pi / omega,
//   beta = 1 / (c^2 k2 |b2|),  sigma~(w) = sigma(k1 w) / k2,  u~ = u / k1.
// Rotations and scalings commute with A0, which is what keeps the drift intact.

#include "cdistab/geometry.hpp"
#include "cdistab/saturation.hpp"

namespace cdistab {

struct NormalFormData {
  Mat4 transform = Mat4::Identity();
  Mat4 inverse = Mat4::Identity();
  double time_scale = 1.0;  ///< old time per new time, c = 2 pi / omega
  double alpha = 0.0;
  double beta = 1.0;
  double lambda = 1.0;  ///< scale on the first block; the construction needs none
  double k1 = 1.0;
  double k2 = 1.0;
  Mat2 u1 = Mat2::Identity();
  Mat2 u2 = Mat2::Identity();
  SaturationFn sigma_normalized = SaturationFn::standard();

  Vec4 forward(const Vec4& x) const { return transform * x; }
  Vec4 backward(const Vec4& big_x) const { return inverse * big_x; }
  /// Gain in the new coordinates: sigma(K^T x) = k2 sigma~(K~^T X).
  Vec4 map_gain(const Vec4& k) const { return inverse.transpose() * k / k1; }
};

/// Throws NotControllableError when b2 = 0 and DomainError when omega <= 0.
NormalFormData normal_form(double omega, const Vec2& b1, const Vec2& b2, const SaturationFn& sigma);

}  // namespace cdistab
