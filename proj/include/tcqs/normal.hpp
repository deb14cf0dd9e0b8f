#pragma once

#include <cmath>
#include <stdexcept>

namespace tcqs {

inline double normal_pdf(double x) {
  return 0.3989422804014327 * std::exp(-0.5 * x * x);
}

// erfc-based CDF; for x <= 0 the erfc argument is nonnegative, so the lower
// tail evaluates without cancellation.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865476);
}

namespace detail {

// Rational approximation (Acklam); max absolute error ~1.2e-9 on its own.
inline double inverse_normal_cdf_guess(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

// Normal quantile: rational initial guess refined by two Newton steps against
// the erfc-based CDF. The upper half is mapped to the lower by symmetry so the
// refinement always works on the cancellation-free tail.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("inverse_normal_cdf: p must lie strictly in (0,1)");
  if (p > 0.5) return -inverse_normal_cdf(1.0 - p);
  double x = detail::inverse_normal_cdf_guess(p);
  for (int it = 0; it < 2; ++it) {
    const double err = normal_cdf(x) - p;
    const double dens = normal_pdf(x);
    if (dens <= 0.0) break;
    x -= err / dens;
  }
  return x;
}

}  // namespace tcqs
