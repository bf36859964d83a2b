#pragma once

#include <cmath>
#include <span>

#include "cdistab/errors.hpp"

namespace cdistab {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  ///< sum of |S2 - S1| / 15 over accepted leaves
  bool converged = true;
  long evaluations = 0;
};

struct SimpsonOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;  ///< leaf accepted if within max(abs share, rel_tol |leaf|)
  int max_depth = 30;
  int min_depth = 3;  ///< forced bisections, guards against aliasing on the first panel
};

namespace detail {

template <typename F>
struct SimpsonRecursion {
  F& f;
  const SimpsonOptions& opt;
  QuadratureResult& out;

  double recurse(double a, double b, double fa, double fm, double fb, double whole,
                 double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    out.evaluations += 2;
    const double h = b - a;
    const double left = h / 12.0 * (fa + 4.0 * flm + fm);
    const double right = h / 12.0 * (fm + 4.0 * frm + fb);
    const double refined = left + right;
    const double diff = refined - whole;
    const double accept = std::fmax(tol, opt.rel_tol * std::fabs(refined));
    if (depth >= opt.min_depth && std::fabs(diff) <= 15.0 * accept) {
      out.error_estimate += std::fabs(diff) / 15.0;
      return refined + diff / 15.0;
    }
    if (depth >= opt.max_depth) {
      out.converged = false;
      out.error_estimate += std::fabs(diff) / 15.0;
      return refined + diff / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b].
template <typename F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, const SimpsonOptions& opt = {}) {
  QuadratureResult out;
  if (a == b) return out;
  const double fa = f(a);
  const double fm = f(0.5 * (a + b));
  const double fb = f(b);
  out.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  detail::SimpsonRecursion<std::remove_reference_t<F>> rec{f, opt, out};
  out.value = rec.recurse(a, b, fa, fm, fb, whole, opt.abs_tol, 0);
  return out;
}

/// Composite Simpson rule over equally spaced samples y[0..n-1] with spacing h.
/// An even sample count closes the last interval with the 3/8 rule.
inline double composite_simpson(std::span<const double> y, double h) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (y[0] + y[1]);
  if (n == 3) return h / 3.0 * (y[0] + 4.0 * y[1] + y[2]);
  // Simpson needs an even number of intervals; peel three off the end if odd.
  const std::size_t intervals = n - 1;
  const std::size_t simpson_end = (intervals % 2 == 0) ? n - 1 : n - 4;
  double acc = y[0] + y[simpson_end];
  for (std::size_t i = 1; i < simpson_end; ++i) {
    acc += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  }
  double total = h / 3.0 * acc;
  if (simpson_end != n - 1) {
    const std::size_t k = simpson_end;
    total += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
  }
  return total;
}

}  // namespace cdistab
