#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "function_pair.hpp"
#include "gaussian.hpp"
#include "hermite.hpp"
#include "linalg.hpp"

namespace hypergauss {

enum class Mode { complex, imaginary, real };
enum class Direction { forward, reverse };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::complex: return "complex";
    case Mode::imaginary: return "imaginary";
    default: return "real";
  }
}

inline const char* direction_name(Direction d) { return d == Direction::forward ? "forward" : "reverse"; }

struct HyperParams {
  Mode mode = Mode::complex;
  std::vector<cplx> z;
  std::vector<double> s;
  std::vector<double> r;
  std::vector<double> p;
  double alpha = 1.0;
  std::optional<std::pair<double, double>> pq;
  std::vector<int> degrees;

  int num_blocks() const { return static_cast<int>(p.size()); }

  // Per-block parameter as a complex number: z, i·s or r.
  cplx param(int j) const {
    switch (mode) {
      case Mode::complex: return z.at(j);
      case Mode::imaginary: return cplx(0.0, s.at(j));
      default: return r.at(j);
    }
  }

  static HyperParams complex_mode(std::vector<cplx> z, std::vector<double> p, double alpha) {
    HyperParams h;
    h.mode = Mode::complex;
    h.z = std::move(z);
    h.p = std::move(p);
    h.alpha = alpha;
    h.check();
    return h;
  }

  static HyperParams imaginary_mode(std::vector<double> s, std::vector<double> p, double alpha) {
    HyperParams h;
    h.mode = Mode::imaginary;
    h.s = std::move(s);
    h.p = std::move(p);
    h.alpha = alpha;
    h.check();
    return h;
  }

  static HyperParams real_mode(std::vector<double> r, std::vector<double> p, double alpha) {
    HyperParams h;
    h.mode = Mode::real;
    h.r = std::move(r);
    h.p = std::move(p);
    h.alpha = alpha;
    h.check();
    return h;
  }

  HyperParams& with_pq(double pp, double qq) {
    if (!(pp > 0.0) || !(qq > 0.0)) throw DomainError("(p,q) must be positive");
    pq = {pp, qq};
    alpha = qq / pp;
    return *this;
  }

  void check() const {
    const std::size_t n = p.size();
    const std::size_t have = mode == Mode::complex ? z.size() : mode == Mode::imaginary ? s.size() : r.size();
    if (have != n) throw DimensionError("one noise parameter per exponent is required");
    for (double pj : p)
      if (pj == 0.0 || !std::isfinite(pj)) throw DomainError("exponents must be finite and nonzero");
    if (mode == Mode::real)
      for (double rj : r)
        if (!(std::abs(rj) <= 1.0)) throw DomainError("real mode needs |r_j| <= 1");
    if (!std::isfinite(alpha) || alpha == 0.0) throw DomainError("alpha must be finite and nonzero");
  }
};

struct ConditionReport {
  bool holds = false;
  double margin = 0.0;
  double scale = 0.0;
  std::vector<double> witness;   // realified eigenvector
  std::vector<cplx> witness_w;   // the same direction as complex coordinates (complex modes)
  std::vector<double> witness_c; // grid point of the worst margin
  bool convexity_ok = true;
  std::vector<std::pair<std::string, double>> details;
  std::string note;
};

inline bool margin_holds(double margin, double scale) { return margin >= -1e-9 * (1.0 + scale); }

namespace detail {

struct FormMargin {
  double margin = 0.0, scale = 0.0;
  std::vector<double> vec;
};

inline FormMargin form_margin(Matrix q) {
  q.symmetrize();
  const EigenResult e = jacobi_eigen(q, false);
  const MinEigen m = min_eigen(q);
  return {m.value, std::max(std::abs(e.values.front()), std::abs(e.values.back())), m.vector};
}

inline ConditionReport report_from(const FormMargin& f) {
  ConditionReport r;
  r.margin = f.margin;
  r.scale = f.scale;
  r.witness = f.vec;
  r.holds = margin_holds(f.margin, f.scale);
  return r;
}

inline std::vector<int> coordinate_blocks(const BlockCovariance& cov) {
  std::vector<int> b;
  for (int j = 0; j < cov.num_blocks(); ++j)
    for (int a = 0; a < cov.block_size(j); ++a) b.push_back(j);
  return b;
}

inline void require_blocks(const HyperParams& hp, const BlockCovariance& cov) {
  hp.check();
  if (hp.num_blocks() != cov.num_blocks()) throw DimensionError("parameter count differs from the number of blocks");
}

inline void require_valid(const BlockCovariance& cov) {
  if (!cov.validation().ok) throw HypothesisError("covariance failed validation: " + cov.validation().reason);
}

inline std::vector<cplx> complexify(const std::vector<double>& v) {
  const std::size_t k = v.size() / 2;
  std::vector<cplx> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = cplx(v[i], v[k + i]);
  return w;
}

// Worst point by relative margin, ties resolved by the lower grid index.
template <class PointCheck>
ConditionReport worst_over_grid(const std::vector<std::vector<double>>& grid, PointCheck&& check) {
  if (grid.empty()) throw DomainError("empty grid");
  std::vector<ConditionReport> reports(grid.size());
  std::vector<std::exception_ptr> errors((grid.size() + 15) / 16);
  for_each_chunk(grid.size(), 16, default_threads(), [&](std::size_t b, std::size_t e, std::size_t chunk) {
    try {
      for (std::size_t i = b; i < e; ++i) {
        reports[i] = check(grid[i]);
        reports[i].witness_c = grid[i];
      }
    } catch (...) {
      errors[chunk] = std::current_exception();
    }
  });
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  std::size_t worst = 0;
  auto rel = [&](std::size_t i) { return reports[i].margin / (1.0 + reports[i].scale); };
  bool all = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    all = all && reports[i].holds;
    if (rel(i) < rel(worst)) worst = i;
  }
  ConditionReport out = std::move(reports[worst]);
  out.holds = all && out.holds;
  return out;
}

}  // namespace detail

// Realified form of the complex local condition in coordinates (Re w, Im w).
inline Matrix complex_local_matrix(const HyperParams& hp, const BlockCovariance& cov) {
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  Matrix q(2 * K, 2 * K);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < K; ++v) {
      const double c = cov(u, v);
      const cplx zu = hp.param(blk[u]), zv = hp.param(blk[v]);
      // Re(z w) = zr·a − zi·b
      const double pu[2] = {zu.real(), -zu.imag()}, pv[2] = {zv.real(), -zv.imag()};
      q(u, v) += c;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) q(x * K + u, y * K + v) -= hp.alpha * pu[x] * c * pv[y];
    }
  for (int u = 0; u < K; ++u) {
    const cplx z = hp.param(blk[u]);
    const cplx one_minus = 1.0 - z * z;
    const double pj = hp.p[blk[u]];
    // Re((cr + i ci)(a + ib)²) = cr(a² − b²) − 2 ci ab
    q(u, u) -= one_minus.real() / pj;
    q(K + u, K + u) += one_minus.real() / pj;
    q(u, K + u) += one_minus.imag() / pj;
    q(K + u, u) += one_minus.imag() / pj;
  }
  return q;
}

inline ConditionReport check_complex_local(const HyperParams& hp, const BlockCovariance& cov) {
  detail::require_blocks(hp, cov);
  if (hp.mode == Mode::real) throw HypothesisError("check_complex_local needs complex or imaginary parameters");
  for (double pj : hp.p)
    if (!(pj > 0.0)) throw DomainError("complex local condition needs p_j > 0");
  ConditionReport r = detail::report_from(detail::form_margin(complex_local_matrix(hp, cov)));
  r.witness_w = detail::complexify(r.witness);
  return r;
}

inline ConditionReport check_imaginary_sandwich(const HyperParams& hp, const BlockCovariance& cov) {
  detail::require_blocks(hp, cov);
  if (hp.mode != Mode::imaginary) throw HypothesisError("check_imaginary_sandwich needs imaginary parameters");
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  Matrix right = cov.matrix();
  for (int u = 0; u < K; ++u) right(u, u) -= (1.0 + hp.s[blk[u]] * hp.s[blk[u]]) / hp.p[blk[u]];
  const detail::FormMargin rm = detail::form_margin(right);
  std::vector<std::size_t> keep;
  for (int u = 0; u < K; ++u)
    if (hp.s[blk[u]] != 0.0) keep.push_back(u);
  ConditionReport r;
  r.details.push_back({"right_margin", rm.margin});
  detail::FormMargin worst = rm;
  bool left_ok = true;
  if (keep.empty()) {
    r.note = "all s_j = 0: only the right inequality is checked";
  } else {
    if (keep.size() < static_cast<std::size_t>(K)) r.note = "s_j = 0 on some blocks: left inequality restricted to s_j != 0";
    Matrix left = cov.matrix().submatrix(keep) * -1.0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const double s = hp.s[blk[keep[i]]];
      left(i, i) += (1.0 + s * s) / (s * s * hp.p[blk[keep[i]]]) / hp.alpha;
    }
    const detail::FormMargin lm = detail::form_margin(left);
    r.details.push_back({"left_margin", lm.margin});
    left_ok = margin_holds(lm.margin, lm.scale);
    if (lm.margin / (1.0 + lm.scale) < rm.margin / (1.0 + rm.scale)) {
      worst = lm;
      worst.vec.assign(K, 0.0);
      for (std::size_t i = 0; i < keep.size(); ++i) worst.vec[keep[i]] = lm.vec[i];
    }
  }
  r.margin = worst.margin;
  r.scale = worst.scale;
  r.witness = worst.vec;
  r.holds = left_ok && margin_holds(rm.margin, rm.scale);
  return r;
}

inline void require_real_alpha(double alpha, Direction d) {
  if (d == Direction::forward && !(alpha < 0.0 || alpha >= 1.0))
    throw HypothesisError("forward real hypercontractivity needs alpha in (-inf,0) or [1,inf)");
  if (d == Direction::reverse && !(alpha > 0.0 && alpha <= 1.0))
    throw HypothesisError("reverse real hypercontractivity needs alpha in (0,1]");
}

// {(1 − α r_u r_v) cov(ξ_u, ξ_v)} − diag{(1 − r_j²)/p_j}.
inline Matrix real_local_matrix(const HyperParams& hp, const BlockCovariance& cov) {
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  Matrix m(K, K);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < K; ++v) m(u, v) = (1.0 - hp.alpha * hp.r[blk[u]] * hp.r[blk[v]]) * cov(u, v);
  for (int u = 0; u < K; ++u) m(u, u) -= (1.0 - hp.r[blk[u]] * hp.r[blk[u]]) / hp.p[blk[u]];
  return m;
}

inline ConditionReport check_real_local(const HyperParams& hp, const BlockCovariance& cov, Direction d = Direction::forward) {
  detail::require_blocks(hp, cov);
  if (hp.mode != Mode::real) throw HypothesisError("check_real_local needs real parameters");
  require_real_alpha(hp.alpha, d);
  Matrix m = real_local_matrix(hp, cov);
  if (d == Direction::reverse) m = m * -1.0;
  return detail::report_from(detail::form_margin(m));
}

inline double correlated_r_bound(double p, double q, double lambda_min) {
  if (p == q) return 1.0;
  return std::sqrt((p * lambda_min - 1.0) / (q * lambda_min - 1.0));
}

inline ConditionReport check_correlated_r_bound(double p, double q, double r, const BlockCovariance& cov) {
  detail::require_valid(cov);
  const double lmin = cov.lambda_min();
  if (q < p) throw HypothesisError("correlated bound needs q >= p");
  if (p * lmin < 1.0 - 1e-12) throw HypothesisError("correlated bound needs p >= 1/lambda_min");
  ConditionReport rep;
  const double bound = correlated_r_bound(p, q, lmin);
  rep.margin = bound - std::abs(r);
  rep.scale = 1.0;
  rep.holds = margin_holds(rep.margin, 0.0);
  rep.details.push_back({"bound", bound});
  rep.details.push_back({"lambda_min", lmin});
  return rep;
}

// Convexity of (t,y) ↦ κ(t) y² through its Hessian [[κ″y², 2κ′y], [2κ′y, 2κ]].
inline bool check_convexity(const OuterFn& F, bool abs_denominator) {
  auto kappa = [&](double t) {
    const double d1 = F.d1(t);
    return F.d2(t) / (abs_denominator ? std::abs(d1) : d1);
  };
  std::vector<double> ts;
  if (F.lo >= 0.0)
    for (int k = 0; k <= 16; ++k) ts.push_back(std::max(F.lo, 0.0) + std::pow(10.0, -2.0 + 0.25 * k));
  else
    for (int k = 0; k <= 16; ++k) ts.push_back(-3.0 + 0.375 * k);
  for (double t : ts) {
    if (t <= F.lo || t >= F.hi) continue;
    const double h = 1e-3 * std::max(std::abs(t), 1e-2);
    auto d1 = [&](double hh) { return (kappa(t + hh) - kappa(t - hh)) / (2 * hh); };
    auto d2 = [&](double hh) { return (kappa(t + hh) - 2 * kappa(t) + kappa(t - hh)) / (hh * hh); };
    const double k0 = kappa(t);
    const double k1 = (4 * d1(h / 2) - d1(h)) / 3, k2 = (4 * d2(h / 2) - d2(h)) / 3;
    for (int j = -5; j <= 5; ++j) {
      const double y = j;
      const Matrix hm = Matrix::from_rows({{k2 * y * y, 2 * k1 * y}, {2 * k1 * y, 2 * k0}});
      const double lmin = min_eigenvalue(hm);
      if (lmin < -1e-7 * hm.max_abs()) return false;
    }
  }
  return true;
}

namespace detail {

inline void require_pair(const FunctionPair& pair, int blocks) {
  if (pair.B.n != blocks) throw DimensionError("B takes " + std::to_string(pair.B.n) + " arguments but there are " +
                                               std::to_string(blocks) + " blocks");
  const DerivativeCheck dc = check_derivatives(pair);
  if (!dc.ok) throw HypothesisError("function pair rejected: derivative check relative error " + std::to_string(dc.worst_relative));
}

// Congruence by diag(√|B|/B_p) when every B_p is nonzero; identity otherwise.
inline std::vector<double> normalizer(double b, const std::vector<double>& g) {
  std::vector<double> d(g.size(), 1.0);
  if (!(std::abs(b) > 0.0)) return d;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!(std::abs(g[j]) > 0.0) || !std::isfinite(g[j])) return std::vector<double>(g.size(), 1.0);
    d[j] = std::sqrt(std::abs(b)) / g[j];
  }
  return d;
}

}  // namespace detail

// Realified FB complex form, before normalization.
inline Matrix fb_complex_matrix(const FunctionPair& pair, const HyperParams& hp, const BlockCovariance& cov,
                                std::span<const double> c) {
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  const double b = pair.B.value(c);
  const std::vector<double> g = pair.B.grad(c);
  const Matrix h = pair.B.hess(c);
  const double kappa = pair.F.d2(b) / pair.F.d1(b);
  Matrix q(2 * K, 2 * K);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < K; ++v) {
      const int ju = blk[u], jv = blk[v];
      const double bm = h(ju, jv) * cov(u, v);
      const double gm = (h(ju, jv) + kappa * g[ju] * g[jv]) * cov(u, v);
      const cplx zu = hp.param(ju), zv = hp.param(jv);
      const double pu[2] = {zu.real(), -zu.imag()}, pv[2] = {zv.real(), -zv.imag()};
      q(u, v) += bm;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) q(x * K + u, y * K + v) -= pu[x] * gm * pv[y];
    }
  for (int u = 0; u < K; ++u) {
    const int j = blk[u];
    const double w = g[j] / c[j];
    const cplx z = hp.param(j);
    // |Im w|² − |Im(z w)|², Im(z w) = zi·a + zr·b
    q(K + u, K + u) += w;
    const double si[2] = {z.imag(), z.real()};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) q(x * K + u, y * K + u) -= w * si[x] * si[y];
  }
  return q;
}

inline ConditionReport check_fb_complex_local(const FunctionPair& pair, const HyperParams& hp, const BlockCovariance& cov,
                                              const std::vector<std::vector<double>>& grid) {
  detail::require_blocks(hp, cov);
  if (hp.mode == Mode::real) throw HypothesisError("check_fb_complex_local needs complex or imaginary parameters");
  detail::require_pair(pair, cov.num_blocks());
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  ConditionReport out = detail::worst_over_grid(grid, [&](const std::vector<double>& c) {
    const double b = pair.B.value(c);
    const std::vector<double> g = pair.B.grad(c);
    if (!(pair.F.d1(b) > 0.0)) throw HypothesisError("F' must be positive on the range of B");
    for (double gj : g)
      if (!(gj > 0.0)) throw HypothesisError("B_m must be positive on the grid");
    Matrix q = fb_complex_matrix(pair, hp, cov, c);
    const std::vector<double> d = detail::normalizer(b, g);
    for (int x = 0; x < 2 * K; ++x)
      for (int y = 0; y < 2 * K; ++y) q(x, y) *= d[blk[x % K]] * d[blk[y % K]];
    return detail::report_from(detail::form_margin(q));
  });
  out.witness_w = detail::complexify(out.witness);
  out.convexity_ok = check_convexity(pair.F, false);
  return out;
}

// {(1 − r_p r_q) B_pq − r_p r_q κ B_p B_q} cov with κ = F″/F′ (normalized) or the printed
// variant F′·((1 − r_p r_q) B_pq − r_p r_q F″ B_p B_q) cov.
inline Matrix fb_real_matrix(const FunctionPair& pair, const HyperParams& hp, const BlockCovariance& cov,
                             std::span<const double> c, bool printed) {
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  const double b = pair.B.value(c);
  const std::vector<double> g = pair.B.grad(c);
  const Matrix h = pair.B.hess(c);
  const double f1 = pair.F.d1(b), f2 = pair.F.d2(b);
  Matrix m(K, K);
  for (int u = 0; u < K; ++u)
    for (int v = 0; v < K; ++v) {
      const int ju = blk[u], jv = blk[v];
      const double rr = hp.r[ju] * hp.r[jv];
      m(u, v) = printed ? f1 * ((1.0 - rr) * h(ju, jv) - rr * f2 * g[ju] * g[jv]) * cov(u, v)
                        : ((1.0 - rr) * h(ju, jv) - rr * (f2 / f1) * g[ju] * g[jv]) * cov(u, v);
    }
  return m;
}

inline ConditionReport check_fb_real_local(const FunctionPair& pair, const HyperParams& hp, const BlockCovariance& cov,
                                           const std::vector<std::vector<double>>& grid, Direction d = Direction::forward) {
  detail::require_blocks(hp, cov);
  if (hp.mode != Mode::real) throw HypothesisError("check_fb_real_local needs real parameters");
  detail::require_pair(pair, cov.num_blocks());
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  const double sign = d == Direction::forward ? 1.0 : -1.0;
  ConditionReport out = detail::worst_over_grid(grid, [&](const std::vector<double>& c) {
    const double b = pair.B.value(c);
    if (pair.F.d1(b) == 0.0) throw HypothesisError("F' vanishes on the range of B");
    const std::vector<double> g = pair.B.grad(c);
    Matrix m = fb_real_matrix(pair, hp, cov, c, false);
    const std::vector<double> dn = detail::normalizer(b, g);
    for (std::size_t x = 0; x < m.rows(); ++x)
      for (std::size_t y = 0; y < m.cols(); ++y) m(x, y) *= sign * dn[blk[x]] * dn[blk[y]];
    ConditionReport r = detail::report_from(detail::form_margin(m));
    const detail::FormMargin pm = detail::form_margin(fb_real_matrix(pair, hp, cov, c, true) * sign);
    r.details.push_back({"printed_margin", pm.margin});
    r.details.push_back({"printed_holds", margin_holds(pm.margin, pm.scale) ? 1.0 : 0.0});
    return r;
  });
  out.convexity_ok = check_convexity(pair.F, true);
  return out;
}

inline ConditionReport check_gaussian_jensen(const InnerFn& B, const BlockCovariance& cov, const std::vector<double>& r,
                                             const std::vector<std::vector<double>>& grid, Direction d = Direction::forward) {
  if (B.n != cov.num_blocks() || static_cast<int>(r.size()) != cov.num_blocks())
    throw DimensionError("B arguments, r and blocks must agree in number");
  const int K = cov.dim();
  const std::vector<int> blk = detail::coordinate_blocks(cov);
  const double sign = d == Direction::forward ? 1.0 : -1.0;
  return detail::worst_over_grid(grid, [&](const std::vector<double>& c) {
    const Matrix h = B.hess(c);
    Matrix m(K, K);
    for (int u = 0; u < K; ++u)
      for (int v = 0; v < K; ++v) m(u, v) = sign * (1.0 - r[blk[u]] * r[blk[v]]) * h(blk[u], blk[v]) * cov(u, v);
    return detail::report_from(detail::form_margin(m));
  });
}

}  // namespace hypergauss
