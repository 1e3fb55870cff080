#pragma once

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "special.hpp"

namespace hypergauss {

// M(u,v;s) = P(ξ ∈ H(u), ξ_s ∈ H(v)) for parallel half-spaces of Gaussian measures u, v.
inline double borell_M(double u, double v, double s) {
  if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) throw DomainError("borell_M needs u, v in (0,1)");
  if (s < -1.0 || s > 1.0) throw DomainError("borell_M needs s in [-1,1]");
  return bvn_cdf(norm_quantile(u), norm_quantile(v), s);
}

// Continuous extension to the closed square, used when noise-smoothed indicators saturate.
inline double borell_M_closed(double u, double v, double s) {
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  return borell_M(u, v, s);
}

struct BorellDerivs {
  double m = 0.0, mu = 0.0, mv = 0.0, muu = 0.0, muv = 0.0, mvv = 0.0;
};

inline BorellDerivs borell_derivatives(double u, double v, double s) {
  if (!(std::abs(s) < 1.0)) throw DomainError("borell derivatives need |s| < 1");
  BorellDerivs d;
  d.m = borell_M(u, v, s);
  const double a = norm_quantile(u), b = norm_quantile(v);
  const double sig = std::sqrt(1.0 - s * s);
  const double ta = (b - s * a) / sig, tb = (a - s * b) / sig;
  d.mu = norm_cdf(ta);
  d.mv = norm_cdf(tb);
  d.muu = -s * norm_pdf(ta) / (sig * norm_pdf(a));
  d.muv = norm_pdf(ta) / (sig * norm_pdf(b));
  d.mvv = -s * norm_pdf(tb) / (sig * norm_pdf(b));
  return d;
}

struct MongeAmpere {
  double squared = 0.0;  // M_uu M_vv − s² M_uv²
  double printed = 0.0;  // M_uu M_vv − s² M_uv
};

inline MongeAmpere monge_ampere_residual(double u, double v, double s) {
  const BorellDerivs d = borell_derivatives(u, v, s);
  return {d.muu * d.mvv - s * s * d.muv * d.muv, d.muu * d.mvv - s * s * d.muv};
}

}  // namespace hypergauss
