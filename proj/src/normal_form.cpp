#include "cdistab/normal_form.hpp"

#include <cmath>
#include <numbers>

#include "cdistab/errors.hpp"

namespace cdistab {

NormalFormData normal_form(double omega, const Vec2& b1, const Vec2& b2, const SaturationFn& sigma) {
  if (!(omega > 0.0)) throw DomainError("normal_form: omega must be positive");
  if (b2.squaredNorm() == 0.0) throw NotControllableError("normal_form: b2 must be non-zero");

  NormalFormData nf;
  nf.k2 = sigma.sigma_inf();
  nf.k1 = nf.k2 / sigma.sigma_prime_0();
  nf.sigma_normalized = sigma.scaled(nf.k1, nf.k2);
  nf.time_scale = kTwoPi / omega;

  const double theta_b2 = angle_of(b2);
  // Step 1 removes b1 from the first block; vacuous when b1 = 0.
  Mat2 p = Mat2::Zero();
  if (b1.squaredNorm() > 0.0) {
    nf.alpha = b1.norm() / b2.norm();
    nf.u1 = rotation(angle_of(b1) - theta_b2);
    p = nf.alpha * nf.u1;
  }

  const double c = nf.time_scale;
  nf.u2 = rotation(std::numbers::pi / 2.0 - theta_b2);
  nf.beta = 1.0 / (c * c * nf.k2 * b2.norm());
  const Mat2 q = nf.beta * nf.u2;
  const Mat2 q_inv = nf.u2.transpose() / nf.beta;

  nf.transform.setZero();
  nf.transform.block<2, 2>(0, 0) = q;
  nf.transform.block<2, 2>(0, 2) = -q * p;
  nf.transform.block<2, 2>(2, 2) = c * q;

  nf.inverse.setZero();
  nf.inverse.block<2, 2>(0, 0) = q_inv;
  nf.inverse.block<2, 2>(0, 2) = p * q_inv / c;
  nf.inverse.block<2, 2>(2, 2) = q_inv / c;
  return nf;
}

}  // namespace cdistab
