#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace hypergauss {

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Wichura's AS241 (PPND16), followed by one Newton step against erfc.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DomainError("norm_quantile: probability outside [0,1]");
  }
  static constexpr double a[8] = {3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                                  1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                                  3.3430575583588128105e4, 2.5090809287301226727e3};
  static constexpr double b[7] = {4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                                  2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                                  5.2264952788528545610e3};
  static constexpr double c[8] = {1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                                  3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                  2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[7] = {2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                                  1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                  1.05075007164441684324e-9};
  static constexpr double e[8] = {6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                                  2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                  2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[7] = {5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                                  7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                  2.04426310338993978564e-15};
  auto num = [](const double* k, double r) {
    return ((((((k[7] * r + k[6]) * r + k[5]) * r + k[4]) * r + k[3]) * r + k[2]) * r + k[1]) * r + k[0];
  };
  auto den = [](const double* k, double r) {
    return ((((((k[6] * r + k[5]) * r + k[4]) * r + k[3]) * r + k[2]) * r + k[1]) * r + k[0]) * r + 1.0;
  };
  const double q = p - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q * num(a, r) / den(b, r);
  } else {
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = num(c, r) / den(d, r);
    } else {
      r -= 5.0;
      x = num(e, r) / den(f, r);
    }
    if (q < 0) x = -x;
  }
  const double pdf = norm_pdf(x);
  if (pdf > 1e-300) {
    const double err = (p < 0.5 ? norm_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2));
    x -= err / pdf;
  }
  return x;
}

// Standard bivariate normal CDF P(X <= x, Y <= y) with corr(X,Y) = rho, from
// d/drho Phi_2 = phi_2 and the substitution rho = sin(theta).
inline double bvn_cdf(double x, double y, double rho) {
  if (rho < -1.0 || rho > 1.0) throw DomainError("bvn_cdf: correlation outside [-1,1]");
  if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return norm_cdf(y);
  if (y == std::numeric_limits<double>::infinity()) return norm_cdf(x);
  if (rho == 1.0) return norm_cdf(std::min(x, y));
  if (rho == -1.0) return std::max(norm_cdf(x) + norm_cdf(y) - 1.0, 0.0);
  const double base = norm_cdf(x) * norm_cdf(y);
  if (rho == 0.0) return base;
  auto integrand = [x, y](double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    if (c <= 0.0) return 0.0;
    return std::exp(-(x * x - 2.0 * x * y * s + y * y) / (2.0 * c * c));
  };
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, std::asin(rho), 15, 1e-12, &err);
  return std::clamp(base + integral / (2.0 * std::numbers::pi), 0.0, 1.0);
}

}  // namespace hypergauss
