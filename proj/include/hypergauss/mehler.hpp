#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "gaussian.hpp"
#include "hermite.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace hypergauss {

struct PolynomialFn {
  HermitePoly f;
};

// h·e_t with e_t(x) = exp(−|x|²/2t).
struct GaussPoly {
  HermitePoly h;
  double t = 1.0;
};

// c·exp(a·x).
struct ExpLinear {
  std::vector<double> a;
  double c = 1.0;
};

// Indicator of (−∞, threshold) on the line.
struct HalfspaceIndicator {
  double threshold = 0.0;
};

// Indicator of a union of sorted disjoint intervals (endpoints may be ±∞).
struct IntervalUnion {
  std::vector<std::pair<double, double>> intervals;
};

// |h|² + delta.
struct ShiftedPositive {
  HermitePoly h;
  double delta = 1.0;
};

using TestFunction = std::variant<PolynomialFn, GaussPoly, ExpLinear, HalfspaceIndicator, IntervalUnion, ShiftedPositive>;

inline TestFunction make_polynomial(HermitePoly f) { return PolynomialFn{std::move(f)}; }

inline TestFunction make_gauss_poly(HermitePoly h, double t) {
  if (!(t > 0.0)) throw DomainError("gauss_poly needs t > 0");
  return GaussPoly{std::move(h), t};
}

inline TestFunction make_exp_linear(std::vector<double> a, double c = 1.0) {
  if (!(c > 0.0)) throw DomainError("exp_linear needs c > 0");
  if (a.empty()) throw DimensionError("exp_linear needs a nonempty direction");
  return ExpLinear{std::move(a), c};
}

inline TestFunction make_halfspace(double threshold) { return HalfspaceIndicator{threshold}; }

inline TestFunction make_interval_union(std::vector<std::pair<double, double>> iv) {
  for (std::size_t i = 0; i < iv.size(); ++i) {
    if (!(iv[i].first < iv[i].second)) throw MalformedInput("interval endpoints must increase");
    if (i > 0 && !(iv[i - 1].second < iv[i].first)) throw MalformedInput("intervals must be sorted and disjoint");
  }
  return IntervalUnion{std::move(iv)};
}

inline TestFunction make_shifted_positive(HermitePoly h, double delta) {
  if (!(delta > 0.0)) throw DomainError("shifted_positive needs delta > 0");
  return ShiftedPositive{std::move(h), delta};
}

inline int function_dim(const TestFunction& f) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PolynomialFn>) return v.f.dim();
        else if constexpr (std::is_same_v<T, GaussPoly>) return v.h.dim();
        else if constexpr (std::is_same_v<T, ExpLinear>) return static_cast<int>(v.a.size());
        else if constexpr (std::is_same_v<T, ShiftedPositive>) return v.h.dim();
        else return 1;
      },
      f);
}

inline bool is_positive_family(const TestFunction& f) {
  return std::holds_alternative<ExpLinear>(f) || std::holds_alternative<ShiftedPositive>(f);
}

// |h|² + delta as a polynomial (real-valued on real points).
inline HermitePoly shifted_positive_polynomial(const ShiftedPositive& s) {
  return add(multiply(s.h, conj(s.h)), HermitePoly::constant(s.h.dim(), s.delta, Basis::monomial));
}

inline cplx evaluate_function(const TestFunction& f, std::span<const double> x) {
  return std::visit(
      [&](const auto& v) -> cplx {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PolynomialFn>) {
          return evaluate(v.f, x);
        } else if constexpr (std::is_same_v<T, GaussPoly>) {
          double r2 = 0.0;
          for (double xi : x) r2 += xi * xi;
          return evaluate(v.h, x) * std::exp(-r2 / (2.0 * v.t));
        } else if constexpr (std::is_same_v<T, ExpLinear>) {
          double s = 0.0;
          for (std::size_t i = 0; i < v.a.size(); ++i) s += v.a[i] * x[i];
          return v.c * std::exp(s);
        } else if constexpr (std::is_same_v<T, HalfspaceIndicator>) {
          return x[0] < v.threshold ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, IntervalUnion>) {
          for (const auto& [lo, hi] : v.intervals)
            if (x[0] >= lo && x[0] <= hi) return 1.0;
          return 0.0;
        } else {
          return std::norm(evaluate(v.h, x)) + v.delta;
        }
      },
      f);
}

// T_z f = Σ z^{|β|} c_β H_β.
inline HermitePoly mehler_transform(const HermitePoly& f, cplx z) {
  const HermitePoly h = to_hermite(f);
  HermitePoly r(h.dim(), Basis::hermite);
  for (const auto& [beta, c] : h.terms()) {
    cplx zp = 1.0;
    for (int k = 0; k < beta.degree(); ++k) zp *= z;
    r.add_term(beta, c * zp);
  }
  return r;
}

using PointFn = std::function<cplx(std::span<const double>)>;

struct NoiseResult {
  std::optional<TestFunction> closed_form;
  PointFn eval;
};

// T_r f(x) = E f(r x + √(1−r²) ξ).
inline NoiseResult noise_operator(const TestFunction& f, double r, int nodes = 48) {
  if (r < -1.0 || r > 1.0) throw DomainError("noise_operator needs |r| <= 1");
  auto closed = [](TestFunction g) {
    NoiseResult res;
    res.closed_form = g;
    res.eval = [g](std::span<const double> x) { return evaluate_function(g, x); };
    return res;
  };
  if (r == 1.0) return closed(f);
  const double sigma = std::sqrt(1.0 - r * r);
  if (const auto* p = std::get_if<PolynomialFn>(&f)) return closed(PolynomialFn{mehler_transform(p->f, r)});
  if (const auto* s = std::get_if<ShiftedPositive>(&f))
    return closed(PolynomialFn{mehler_transform(shifted_positive_polynomial(*s), r)});
  if (const auto* e = std::get_if<ExpLinear>(&f)) {
    double a2 = 0.0;
    std::vector<double> ra(e->a.size());
    for (std::size_t i = 0; i < e->a.size(); ++i) {
      a2 += e->a[i] * e->a[i];
      ra[i] = r * e->a[i];
    }
    return closed(ExpLinear{ra, e->c * std::exp(a2 * (1.0 - r * r) / 2.0)});
  }
  NoiseResult res;
  if (r == -1.0) {
    res.eval = [f](std::span<const double> x) {
      std::vector<double> y(x.begin(), x.end());
      for (double& v : y) v = -v;
      return evaluate_function(f, y);
    };
    return res;
  }
  if (const auto* h = std::get_if<HalfspaceIndicator>(&f)) {
    const double theta = h->threshold;
    res.eval = [theta, r, sigma](std::span<const double> x) -> cplx { return norm_cdf((theta - r * x[0]) / sigma); };
    return res;
  }
  if (const auto* iv = std::get_if<IntervalUnion>(&f)) {
    const auto intervals = iv->intervals;
    res.eval = [intervals, r, sigma](std::span<const double> x) -> cplx {
      double total = 0.0;
      for (const auto& [lo, hi] : intervals) total += norm_cdf((hi - r * x[0]) / sigma) - norm_cdf((lo - r * x[0]) / sigma);
      return total;
    };
    return res;
  }
  const int dim = function_dim(f);
  res.eval = [f, r, sigma, dim, nodes](std::span<const double> x) {
    std::vector<double> y(dim);
    return tensor_gauss_hermite(
        [&](std::span<const double> g) {
          for (int i = 0; i < dim; ++i) y[i] = r * x[i] + sigma * g[i];
          return evaluate_function(f, y);
        },
        dim, nodes);
  };
  return res;
}

struct KernelResult {
  cplx value;
  double error_estimate = 0.0;
  bool conclusive = true;
};

namespace detail {

template <class Eval>
KernelResult two_level(Eval&& eval, int nodes, int dim) {
  const int fine = nodes + std::max(8, nodes / 2);
  if (!quadrature_feasible(dim, fine)) throw CapacityError("quadrature budget exceeded for this dimension");
  const cplx coarse_v = eval(nodes), fine_v = eval(fine);
  KernelResult r{fine_v, std::abs(fine_v - coarse_v), true};
  r.conclusive = r.error_estimate <= 1e-9 * (1.0 + std::abs(fine_v));
  return r;
}

}  // namespace detail

// Mehler's kernel integral: T_z f(x) = ∫ f(y) (1−z²)^{−n/2}
// exp(−(|x|²+|y|²)/2 · z²/(1−z²) + x·y z/(1−z²)) dγ(y), evaluated after the
// substitution y = η/√Re(1/(1−z²)) so that the Gaussian part becomes standard.
inline KernelResult mehler_kernel_apply(const TestFunction& f, cplx z, std::span<const double> x, int nodes = 64) {
  const int n = function_dim(f);
  if (static_cast<int>(x.size()) != n) throw DimensionError("mehler_kernel_apply: point length differs from dim");
  const cplx one_minus = 1.0 - z * z;
  if (std::abs(one_minus) < 1e-14) throw DomainError("mehler kernel needs z² != 1");
  const cplx a = 1.0 / one_minus;
  const double v = a.real();
  if (!(v > 0.0)) throw DomainError("mehler kernel needs Re 1/(1−z²) > 0");
  const double sv = std::sqrt(v);
  double x2 = 0.0;
  for (double xi : x) x2 += xi * xi;
  const cplx pref = std::pow(one_minus, -0.5 * n) * std::pow(v, -0.5 * n) * std::exp(-x2 * z * z * a / 2.0);
  const cplx quad = a / v - 1.0;  // purely imaginary
  const cplx lin = z * a / sv;
  auto eval = [&](int m) {
    std::vector<double> y(n);
    return pref * tensor_gauss_hermite(
                      [&](std::span<const double> eta) {
                        double e2 = 0.0, xe = 0.0;
                        for (int i = 0; i < n; ++i) {
                          y[i] = eta[i] / sv;
                          e2 += eta[i] * eta[i];
                          xe += x[i] * eta[i];
                        }
                        return evaluate_function(f, y) * std::exp(-e2 * quad / 2.0 + xe * lin);
                      },
                      n, m);
  };
  return detail::two_level(eval, nodes, n);
}

// ĝ(ω) = (2π)^{−n/2} ∫ g(y) e^{−iω·y} dy for g = h·e_t, via y = √t η.
inline KernelResult fourier_transform(const GaussPoly& g, std::span<const double> omega, int nodes = 64) {
  const int n = g.h.dim();
  const double st = std::sqrt(g.t);
  auto eval = [&](int m) {
    std::vector<double> y(n);
    return std::pow(g.t, 0.5 * n) * tensor_gauss_hermite(
                                        [&](std::span<const double> eta) {
                                          double phase = 0.0;
                                          for (int i = 0; i < n; ++i) {
                                            y[i] = st * eta[i];
                                            phase += omega[i] * y[i];
                                          }
                                          return evaluate(g.h, y) * std::exp(cplx(0.0, -phase));
                                        },
                                        n, m);
  };
  return detail::two_level(eval, nodes, n);
}

// ê_t(ω) = t^{n/2} e^{−|ω|²t/2}.
inline double gaussian_fourier(double t, std::span<const double> omega) {
  double w2 = 0.0;
  for (double w : omega) w2 += w * w;
  return std::pow(t, 0.5 * omega.size()) * std::exp(-w2 * t / 2.0);
}

// (ĝ/ê_t)(−x√(t−1)/t); equals T_{i√(t−1)} f(x) for g = f·e_t.
inline KernelResult fourier_ratio(const GaussPoly& g, std::span<const double> x, int nodes = 64) {
  if (!(g.t >= 1.0)) throw DomainError("fourier_ratio needs t >= 1");
  const int n = g.h.dim();
  if (static_cast<int>(x.size()) != n) throw DimensionError("fourier_ratio: point length differs from dim");
  std::vector<double> omega(n);
  for (int i = 0; i < n; ++i) omega[i] = -x[i] * std::sqrt(g.t - 1.0) / g.t;
  KernelResult r = fourier_transform(g, omega, nodes);
  const double denom = gaussian_fourier(g.t, omega);
  r.value /= denom;
  r.error_estimate /= denom;
  r.conclusive = r.error_estimate <= 1e-9 * (1.0 + std::abs(r.value));
  return r;
}

}  // namespace hypergauss
