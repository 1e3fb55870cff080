#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "borell.hpp"
#include "errors.hpp"
#include "linalg.hpp"

namespace hypergauss {

// Outer function F on an interval J.
struct OuterFn {
  std::string name;
  std::function<double(double)> f, d1, d2;
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
};

// Inner function B on a rectangular box, with exact gradient and Hessian.
struct InnerFn {
  std::string name;
  int n = 0;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> grad;
  std::function<Matrix(std::span<const double>)> hess;
  std::vector<std::pair<double, double>> box;
};

struct FunctionPair {
  OuterFn F;
  InnerFn B;
};

inline OuterFn power_F(double alpha, double scale = 1.0) {
  if (alpha == 0.0) throw DomainError("power F needs alpha != 0");
  OuterFn F;
  F.name = "power";
  F.f = [=](double t) { return scale * std::pow(t, alpha); };
  F.d1 = [=](double t) { return scale * alpha * std::pow(t, alpha - 1.0); };
  F.d2 = [=](double t) { return scale * alpha * (alpha - 1.0) * std::pow(t, alpha - 2.0); };
  return F;
}

inline OuterFn identity_F() { return {"identity", [](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; },
                                      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()}; }

inline OuterFn scaled_affine_F(double a, double b) {
  if (a == 0.0) throw DomainError("scaled_affine F needs a nonzero slope");
  return {"scaled_affine", [=](double t) { return a * t + b; }, [=](double) { return a; }, [](double) { return 0.0; },
          -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

inline InnerFn product_of_powers_B(std::vector<double> p) {
  for (double pj : p)
    if (pj == 0.0) throw DomainError("product_of_powers needs nonzero exponents");
  InnerFn B;
  B.name = "product_of_powers";
  B.n = static_cast<int>(p.size());
  B.box.assign(p.size(), {0.0, std::numeric_limits<double>::infinity()});
  B.value = [p](std::span<const double> c) {
    double v = 1.0;
    for (std::size_t j = 0; j < p.size(); ++j) v *= std::pow(c[j], p[j]);
    return v;
  };
  B.grad = [p, val = B.value](std::span<const double> c) {
    const double v = val(c);
    std::vector<double> g(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[j] * v / c[j];
    return g;
  };
  B.hess = [p, val = B.value](std::span<const double> c) {
    const double v = val(c);
    Matrix h(p.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j) h(i, j) = (p[i] * p[j] - (i == j ? p[i] : 0.0)) * v / (c[i] * c[j]);
    return h;
  };
  return B;
}

inline InnerFn borell_B(double s) {
  if (!(std::abs(s) < 1.0)) throw DomainError("borell_M pair needs |s| < 1");
  InnerFn B;
  B.name = "borell_M";
  B.n = 2;
  B.box.assign(2, {0.0, 1.0});
  B.value = [s](std::span<const double> c) { return borell_M(c[0], c[1], s); };
  B.grad = [s](std::span<const double> c) {
    const BorellDerivs d = borell_derivatives(c[0], c[1], s);
    return std::vector<double>{d.mu, d.mv};
  };
  B.hess = [s](std::span<const double> c) {
    const BorellDerivs d = borell_derivatives(c[0], c[1], s);
    return Matrix::from_rows({{d.muu, d.muv}, {d.muv, d.mvv}});
  };
  return B;
}

// ½ cᵀQc with Q symmetric; Σ c_j² is Q = 2I, c₁c₂ is Q = [[0,1],[1,0]].
inline InnerFn quadratic_B(Matrix q, std::string name = "quadratic") {
  if (q.rows() != q.cols() || q.asymmetry() > 1e-12) throw MalformedInput("quadratic B needs a symmetric matrix");
  InnerFn B;
  B.name = std::move(name);
  B.n = static_cast<int>(q.rows());
  B.box.assign(q.rows(), {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  B.value = [q](std::span<const double> c) {
    double v = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i)
      for (std::size_t j = 0; j < q.cols(); ++j) v += 0.5 * c[i] * q(i, j) * c[j];
    return v;
  };
  B.grad = [q](std::span<const double> c) {
    std::vector<double> g(q.rows(), 0.0);
    for (std::size_t i = 0; i < q.rows(); ++i)
      for (std::size_t j = 0; j < q.cols(); ++j) g[i] += q(i, j) * c[j];
    return g;
  };
  B.hess = [q](std::span<const double>) { return q; };
  return B;
}

inline InnerFn sum_of_squares_B(int n) {
  return quadratic_B(Matrix::identity(n) * 2.0, "sum_of_squares");
}

inline InnerFn bilinear_B() { return quadratic_B(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}), "bilinear"); }

inline InnerFn custom_B(std::string name, int n, std::vector<std::pair<double, double>> box,
                        std::function<double(std::span<const double>)> value,
                        std::function<std::vector<double>(std::span<const double>)> grad,
                        std::function<Matrix(std::span<const double>)> hess) {
  if (static_cast<int>(box.size()) != n) throw DimensionError("custom B: box size differs from n");
  return {std::move(name), n, std::move(value), std::move(grad), std::move(hess), std::move(box)};
}

struct DerivativeCheck {
  bool ok = true;
  double worst_relative = 0.0;
  std::vector<double> worst_point;
};

namespace detail {

// Interior sampling: log-uniform on half-lines, uniform on bounded intervals.
inline double sample_interior(std::pair<double, double> iv, std::mt19937_64& rng) {
  const auto [lo, hi] = iv;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (std::isfinite(lo) && std::isfinite(hi)) return lo + (hi - lo) * (0.05 + 0.9 * u(rng));
  if (std::isfinite(lo)) return lo + std::exp(std::log(0.1) + std::log(100.0) * u(rng));
  if (std::isfinite(hi)) return hi - std::exp(std::log(0.1) + std::log(100.0) * u(rng));
  return -3.0 + 6.0 * u(rng);
}

inline double rel_err(double fd, double exact, double scale) {
  return std::abs(fd - exact) / std::max({std::abs(exact), 1e-3 * scale, 1e-12});
}

}  // namespace detail

// Central differences with step 1e-5 (relative to the point's magnitude) at random interior points.
inline DerivativeCheck check_derivatives(const FunctionPair& pair, int points = 50, std::uint64_t seed = 7, double tol = 1e-6) {
  DerivativeCheck res;
  std::mt19937_64 rng(seed);
  auto note = [&](double e, std::vector<double> at) {
    if (e > res.worst_relative) {
      res.worst_relative = e;
      res.worst_point = std::move(at);
    }
  };
  const auto& B = pair.B;
  for (int k = 0; k < points; ++k) {
    std::vector<double> c(B.n);
    for (int i = 0; i < B.n; ++i) c[i] = detail::sample_interior(B.box[i], rng);
    const std::vector<double> g = B.grad(c);
    const Matrix h = B.hess(c);
    double gscale = 0.0, hscale = h.max_abs();
    for (double gi : g) gscale = std::max(gscale, std::abs(gi));
    for (int i = 0; i < B.n; ++i) {
      const double room = std::min(c[i] - B.box[i].first, B.box[i].second - c[i]);
      const double step = std::min(1e-5 * std::max(std::abs(c[i]), 1.0), 0.5 * room);
      std::vector<double> cp = c, cm = c;
      cp[i] += step;
      cm[i] -= step;
      note(detail::rel_err((B.value(cp) - B.value(cm)) / (2 * step), g[i], gscale), c);
      const std::vector<double> gp = B.grad(cp), gm = B.grad(cm);
      for (int j = 0; j < B.n; ++j) note(detail::rel_err((gp[j] - gm[j]) / (2 * step), h(j, i), hscale), c);
    }
    const double t = detail::sample_interior({std::max(pair.F.lo, 0.0), pair.F.hi}, rng);
    const double step = std::min(1e-5 * std::max(std::abs(t), 1.0), 0.5 * (t - std::max(pair.F.lo, 0.0)));
    const double d1 = pair.F.d1(t), d2 = pair.F.d2(t);
    note(detail::rel_err((pair.F.f(t + step) - pair.F.f(t - step)) / (2 * step), d1, std::abs(d1)), {t});
    note(detail::rel_err((pair.F.d1(t + step) - pair.F.d1(t - step)) / (2 * step), d2, std::abs(d1)), {t});
  }
  res.ok = res.worst_relative < tol;
  return res;
}

// Nine points per axis (fewer once the tensor grid gets large) plus random points, all seeded.
inline std::vector<std::vector<double>> default_grid(const std::vector<std::pair<double, double>>& box, int per_axis = 9,
                                                     int random_points = 200, std::uint64_t seed = 11) {
  const int n = static_cast<int>(box.size());
  while (per_axis > 2 && std::pow(per_axis, n) > 4096) --per_axis;
  auto axis = [&](std::pair<double, double> iv) {
    std::vector<double> pts(per_axis);
    const auto [lo, hi] = iv;
    for (int k = 0; k < per_axis; ++k) {
      const double u = per_axis == 1 ? 0.5 : static_cast<double>(k) / (per_axis - 1);
      if (std::isfinite(lo) && std::isfinite(hi)) pts[k] = lo + (hi - lo) * (0.02 + 0.96 * u);
      else if (std::isfinite(lo)) pts[k] = lo + std::pow(10.0, -2.0 + 4.0 * u);
      else if (std::isfinite(hi)) pts[k] = hi - std::pow(10.0, -2.0 + 4.0 * u);
      else pts[k] = -3.0 + 6.0 * u;
    }
    return pts;
  };
  std::vector<std::vector<double>> axes;
  for (const auto& iv : box) axes.push_back(axis(iv));
  std::vector<std::vector<double>> grid;
  std::vector<int> idx(n, 0);
  while (true) {
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = axes[i][idx[i]];
    grid.push_back(std::move(c));
    int i = 0;
    while (i < n && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == n) break;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < random_points; ++k) {
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = box[i];
      if (std::isfinite(lo) && std::isfinite(hi)) c[i] = lo + (hi - lo) * (0.02 + 0.96 * u(rng));
      else if (std::isfinite(lo)) c[i] = lo + std::pow(10.0, -2.0 + 4.0 * u(rng));
      else if (std::isfinite(hi)) c[i] = hi - std::pow(10.0, -2.0 + 4.0 * u(rng));
      else c[i] = -3.0 + 6.0 * u(rng);
    }
    grid.push_back(std::move(c));
  }
  return grid;
}

}  // namespace hypergauss
