#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "linalg.hpp"
#include "special.hpp"

namespace hypergauss {

// Gauss–Hermite rule for the standard normal density (weights sum to 1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussHermiteRule build_gauss_hermite(int n) {
  if (n < 1 || n > 256) throw CapacityError("Gauss-Hermite rule supports 1..256 nodes");
  Matrix jac(n, n);
  for (int k = 1; k < n; ++k) jac(k - 1, k) = jac(k, k - 1) = std::sqrt(static_cast<double>(k));
  std::vector<double> x = jacobi_eigen(jac, false).values;
  GaussHermiteRule rule{std::vector<double>(n), std::vector<double>(n)};
  // Orthonormal recurrence h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
  auto eval = [n](double xi, double& hn, double& hn1, double& christoffel) {
    double prev = 0.0, cur = 1.0;
    christoffel = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double next = (xi * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
      prev = cur;
      cur = next;
      christoffel += cur * cur;
    }
    hn1 = cur;
    hn = (xi * cur - std::sqrt(n - 1.0) * prev) / std::sqrt(static_cast<double>(n));
  };
  for (int i = 0; i < n; ++i) {
    double xi = x[i], hn = 0.0, hn1 = 0.0, christoffel = 1.0;
    for (int iter = 0; iter < 3; ++iter) {
      eval(xi, hn, hn1, christoffel);
      const double deriv = std::sqrt(static_cast<double>(n)) * hn1;
      if (!std::isfinite(hn) || !std::isfinite(deriv) || deriv == 0.0) break;
      xi -= hn / deriv;
    }
    eval(xi, hn, hn1, christoffel);
    rule.nodes[i] = xi;
    rule.weights[i] = std::isfinite(christoffel) ? 1.0 / christoffel : 0.0;
  }
  for (int i = 0; i < n / 2; ++i) {
    const double xs = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double ws = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -xs;
    rule.nodes[n - 1 - i] = xs;
    rule.weights[i] = rule.weights[n - 1 - i] = ws;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace detail

inline const GaussHermiteRule& gauss_hermite(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(detail::build_gauss_hermite(n));
  return *slot;
}

// Sum of w(g)·fn(g) over the tensor grid in dims standard-normal coordinates.
template <class Fn>
auto tensor_gauss_hermite(Fn&& fn, std::size_t dims, int nodes) {
  const GaussHermiteRule& rule = gauss_hermite(nodes);
  std::vector<double> g(dims, 0.0);
  std::vector<int> idx(dims, 0);
  using R = decltype(fn(std::span<const double>(g)));
  R total{};
  if (dims == 0) return fn(std::span<const double>(g));
  while (true) {
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      g[d] = rule.nodes[idx[d]];
      w *= rule.weights[idx[d]];
    }
    total += w * fn(std::span<const double>(g));
    std::size_t d = 0;
    while (d < dims && ++idx[d] == nodes) idx[d++] = 0;
    if (d == dims) break;
  }
  return total;
}

// E fn(X), X ~ N(0,1), by adaptive Gauss–Kronrod on the pieces cut at the
// given breakpoints (kinks, jumps).
template <class Fn>
double expect_normal_1d(Fn&& fn, std::vector<double> breaks = {}, double tol = 1e-13, double* error = nullptr) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> edges;
  // fixed cuts at ±10 keep the infinite-interval maps anchored near the mass
  edges.push_back(-std::numeric_limits<double>::infinity());
  edges.push_back(-10.0);
  for (double b : breaks)
    if (std::isfinite(b) && std::abs(b) < 10.0) edges.push_back(b);
  edges.push_back(10.0);
  edges.push_back(std::numeric_limits<double>::infinity());
  auto weighted = [&](double x) {
    const double pdf = norm_pdf(x);
    return pdf == 0.0 ? 0.0 : fn(x) * pdf;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const std::size_t m = edges.size() - 1;
  std::vector<double> est(m), err(m);
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    est[i] = GK::integrate(weighted, edges[i], edges[i + 1], 0, tol, &err[i]);
    scale += std::abs(est[i]) + err[i];
  }
  // each piece is refined against tol·(overall size), so pieces carrying almost no mass stop early
  const double target = tol * std::max(scale, 1e-300);
  double total = 0.0, err_total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (err[i] > target) {
      const double rel = std::min(0.5, target / std::max({std::abs(est[i]), err[i], 1e-300}));
      const bool tail = std::isinf(edges[i]) || std::isinf(edges[i + 1]);
      est[i] = GK::integrate(weighted, edges[i], edges[i + 1], tail ? 6 : 25, rel, &err[i]);
    }
    total += est[i];
    err_total += err[i];
  }
  if (error) *error = err_total;
  return total;
}

}  // namespace hypergauss
