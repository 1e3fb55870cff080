#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "errors.hpp"

namespace hypergauss {

struct SharpConstants {
  // Hausdorff–Young constant for ĝ(x) = (2π)^{−n/2} ∫ g(y) e^{−ix·y} dy.
  static double beckner_babenko(double p, double q, int n) {
    if (!(p >= 1.0 && q >= 1.0)) throw DomainError("beckner_babenko needs p, q >= 1");
    return std::pow(p, n / (2.0 * p)) / std::pow(q, n / (2.0 * q)) *
           std::pow(2.0 * std::numbers::pi, n / (2.0 * q) - n / (2.0 * p));
  }

  static double pq_hy(double p, double lambda_min, int total_k) { return std::pow(p * lambda_min, total_k / 2.0); }

  static double rho_hy(double p, double q, double rho, int n) {
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho_hy needs rho in [0,1)");
    return std::pow(p * (1.0 - rho), n - n / q) / std::pow(q * (1.0 + rho), n / q) /
           std::pow(2.0 * std::numbers::pi * std::sqrt(1.0 - rho * rho), n / p - n / q);
  }

  // Infinite when pλ_min = 1.
  static double chaos_complex(double p, double q, double lambda_min, double lambda_max, int total_d) {
    const double a = p * lambda_min - 1.0;
    if (a < -1e-12) throw HypothesisError("chaos bound needs p >= 1/lambda_min");
    if (a <= 1e-12) return std::numeric_limits<double>::infinity();
    return std::pow(std::max(1.0 / a, q * lambda_max - 1.0), total_d / 2.0);
  }

  static double chaos_real(double p, double q, double lambda_min, int total_d) {
    const double a = p * lambda_min - 1.0;
    if (a < -1e-12) throw HypothesisError("chaos bound needs p >= 1/lambda_min");
    if (p == q) return 1.0;
    if (a <= 1e-12) return std::numeric_limits<double>::infinity();
    return std::pow((q * lambda_min - 1.0) / a, total_d / 2.0);
  }

  static double log_sobolev(double p, double lambda_min) {
    const double a = p * lambda_min - 1.0;
    if (a < -1e-12) throw HypothesisError("log-Sobolev constant needs p >= 1/lambda_min");
    if (a <= 1e-12) return std::numeric_limits<double>::infinity();
    return p * p * lambda_min / (2.0 * std::sqrt(a));
  }

  // The constant for the −L form, attained along the λ_min eigenvector by exponentials.
  static double log_sobolev_corrected(double p, double lambda_min) {
    const double a = p * lambda_min - 1.0;
    if (a < -1e-12) throw HypothesisError("log-Sobolev constant needs p >= 1/lambda_min");
    if (a <= 1e-12) return std::numeric_limits<double>::infinity();
    return p * p * lambda_min / (2.0 * a);
  }
};

}  // namespace hypergauss
