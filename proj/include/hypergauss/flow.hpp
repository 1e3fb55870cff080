#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "function_pair.hpp"
#include "gaussian.hpp"
#include "global.hpp"
#include "hermite.hpp"
#include "local.hpp"
#include "mehler.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace hypergauss {

enum class FlowVariant { real, complex };

inline const char* flow_variant_name(FlowVariant v) { return v == FlowVariant::real ? "real" : "complex"; }

inline std::vector<double> default_s_grid() {
  std::vector<double> s;
  for (int i = 0; i <= 10; ++i) s.push_back(i / 10.0);
  return s;
}

struct FlowBudget {
  int nodes = 40;        // outer tensor nodes per dimension
  int inner_nodes = 40;  // inner tensor nodes per dimension
  std::size_t samples = 2000;  // outer samples in mc mode
  std::uint64_t seed = 1;
  bool force_mc = false;
  bool estimate_error = true;
  double tol = 1e-9;
};

// Real variant: F, B and positive test functions with T_{r_p}. Complex variant: F, M acting on
// squared moduli, and Hermite-basis polynomials f_p; ℓ_p carries the same coefficients in the monomial basis.
struct FlowSpec {
  FlowVariant variant = FlowVariant::real;
  OuterFn F;
  InnerFn B;
  HyperParams params;
  BlockCovariance cov;
  std::vector<TestFunction> real_fs;
  std::vector<HermitePoly> complex_fs;
  std::vector<double> s_grid = default_s_grid();
  FlowBudget budget;
};

inline FlowSpec real_flow(FunctionPair pair, HyperParams hp, BlockCovariance cov, std::vector<TestFunction> fs) {
  FlowSpec s;
  s.variant = FlowVariant::real;
  s.F = std::move(pair.F);
  s.B = std::move(pair.B);
  s.params = std::move(hp);
  s.cov = std::move(cov);
  s.real_fs = std::move(fs);
  return s;
}

inline FlowSpec complex_flow(OuterFn F, InnerFn M, HyperParams hp, BlockCovariance cov, std::vector<HermitePoly> fs) {
  FlowSpec s;
  s.variant = FlowVariant::complex;
  s.F = std::move(F);
  s.B = std::move(M);
  s.params = std::move(hp);
  s.cov = std::move(cov);
  s.complex_fs = std::move(fs);
  return s;
}

// F = t^α with M(c) = ∏ c_j^{p_j/2}, so that F∘M(|f|²) = ∏|f_j|^{α p_j}.
inline std::pair<OuterFn, InnerFn> complex_power_pair(const std::vector<double>& p, double alpha) {
  std::vector<double> half(p);
  for (double& v : half) v /= 2.0;
  return {power_F(alpha), product_of_powers_B(half)};
}

struct AffineMap {
  double shift = 0.0, scale = 1.0;  // c = shift + scale·c̃ with c̃ ∈ [0,1] when the box is bounded
};

namespace detail {

inline void validate_flow(const FlowSpec& spec) {
  require_blocks(spec.params, spec.cov);
  const int n = spec.cov.num_blocks();
  if (spec.B.n != n) throw DimensionError("flow inner function must take one argument per block");
  if (spec.s_grid.size() < 5) throw DomainError("flow grid needs at least 5 points");
  for (std::size_t i = 0; i < spec.s_grid.size(); ++i) {
    if (!(spec.s_grid[i] >= 0.0 && spec.s_grid[i] <= 1.0)) throw DomainError("flow grid points must lie in [0,1]");
    if (i && !(spec.s_grid[i] > spec.s_grid[i - 1])) throw DomainError("flow grid must be strictly increasing");
  }
  if (spec.variant == FlowVariant::real) {
    if (spec.params.mode != Mode::real) throw HypothesisError("real flow needs real parameters");
    if (static_cast<int>(spec.real_fs.size()) != n) throw DimensionError("one test function per block");
    for (int j = 0; j < n; ++j) {
      const TestFunction& f = spec.real_fs[j];
      if (function_dim(f) != spec.cov.block_size(j)) throw DimensionError("test function dimension differs from its block");
      if (std::holds_alternative<GaussPoly>(f)) throw DomainError("real flow does not support gauss_poly test functions");
      if (const auto* p = std::get_if<PolynomialFn>(&f))
        for (const auto& [b, c] : p->f.terms())
          if (c.imag() != 0.0) throw DomainError("real flow needs real-valued test functions");
    }
  } else {
    if (spec.params.mode == Mode::real) throw HypothesisError("complex flow needs complex or imaginary parameters");
    if (static_cast<int>(spec.complex_fs.size()) != n) throw DimensionError("one polynomial per block");
    for (int j = 0; j < n; ++j) {
      if (spec.complex_fs[j].dim() != spec.cov.block_size(j)) throw DimensionError("polynomial dimension differs from its block");
      check_cap(spec.complex_fs[j].degree());
    }
  }
}

// Sampled range check of the real test functions against the declared box.
inline std::vector<AffineMap> check_ranges(const FlowSpec& spec, std::size_t points = 10000) {
  const int n = spec.cov.num_blocks();
  std::vector<AffineMap> maps(n);
  const CounterRng rng(derive_seed(spec.budget.seed, 0x72616e6765ULL));
  for (int j = 0; j < n; ++j) {
    const auto [lo, hi] = spec.B.box[j];
    if (std::isfinite(lo) && std::isfinite(hi)) maps[j] = {lo, hi - lo};
    const int k = spec.cov.block_size(j);
    std::vector<double> x(k);
    for (std::size_t i = 0; i < points; ++i) {
      for (int d = 0; d < k; ++d) x[d] = rng.normal(i, static_cast<std::uint64_t>(j * 64 + d));
      const double v = evaluate_function(spec.real_fs[j], x).real();
      if (!(v >= lo && v <= hi))
        throw DomainError("test function " + std::to_string(j) + " leaves the box of B (value " + std::to_string(v) + ")");
    }
  }
  return maps;
}

// Monomial-basis polynomial flattened for repeated evaluation without allocation.
class FastPoly {
 public:
  FastPoly() = default;
  explicit FastPoly(const HermitePoly& f) : dim_(f.dim()), deg_(f.degree()) {
    const HermitePoly m = f.basis() == Basis::monomial ? f : to_monomial(f);
    for (const auto& [b, c] : m.terms()) {
      coef_.push_back(c);
      for (int d = 0; d < dim_; ++d) exps_.push_back(b[d]);
    }
  }

  template <class T>
  cplx operator()(std::span<const T> x, std::vector<cplx>& scratch) const {
    const int w = deg_ + 1;
    scratch.resize(static_cast<std::size_t>(dim_ * w));
    for (int d = 0; d < dim_; ++d) {
      cplx* row = scratch.data() + d * w;
      row[0] = 1.0;
      for (int k = 1; k <= deg_; ++k) row[k] = row[k - 1] * cplx(x[d]);
    }
    cplx total = 0.0;
    for (std::size_t t = 0; t < coef_.size(); ++t) {
      cplx v = coef_[t];
      for (int d = 0; d < dim_; ++d) v *= scratch[d * w + exps_[t * dim_ + d]];
      total += v;
    }
    return total;
  }

 private:
  int dim_ = 1, deg_ = 0;
  std::vector<cplx> coef_;
  std::vector<int> exps_;
};

// E f(m + σ N) for N standard on R^k, per block, with σ² fixed for the current s.
class RealSmoother {
 public:
  RealSmoother(const TestFunction& f, double var) : f_(f), var_(var) {
    if (const auto* p = std::get_if<PolynomialFn>(&f)) poly_ = FastPoly(gaussian_smoothing(to_monomial(p->f), var));
    else if (const auto* s = std::get_if<ShiftedPositive>(&f)) poly_ = FastPoly(gaussian_smoothing(to_monomial(shifted_positive_polynomial(*s)), var));
  }

  double operator()(std::span<const double> m, std::vector<cplx>& scratch) const {
    if (poly_) return (*poly_)(m, scratch).real();
    const double sd = std::sqrt(var_);
    if (const auto* e = std::get_if<ExpLinear>(&f_)) {
      double am = 0.0, a2 = 0.0;
      for (std::size_t i = 0; i < e->a.size(); ++i) {
        am += e->a[i] * m[i];
        a2 += e->a[i] * e->a[i];
      }
      return e->c * std::exp(am + var_ * a2 / 2.0);
    }
    auto z = [&](double t) {
      if (std::isinf(t)) return t;
      if (sd == 0.0) return t > m[0] ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      return (t - m[0]) / sd;
    };
    if (const auto* h = std::get_if<HalfspaceIndicator>(&f_)) return norm_cdf(z(h->threshold));
    const auto& iv = std::get<IntervalUnion>(f_);
    double total = 0.0;
    for (const auto& [a, b] : iv.intervals) {
      const double za = z(a), zb = z(b);
      // upper tails when both ends are right of the mean, to avoid cancellation
      total += za > 0.0 ? norm_cdf(-za) - norm_cdf(-zb) : norm_cdf(zb) - norm_cdf(za);
    }
    return total;
  }

 private:
  TestFunction f_;
  double var_;
  std::optional<FastPoly> poly_;
};

struct NodeSet {
  std::vector<std::vector<double>> points;  // correlated points A·g
  std::vector<double> weights;
};

inline NodeSet tensor_nodes(const BlockCovariance& cov, int nodes) {
  const int K = cov.dim();
  if (!quadrature_feasible(K, nodes)) throw CapacityError("flow tensor grid too large for dimension " + std::to_string(K));
  const Matrix& a = cov.factor();
  const GaussHermiteRule& rule = gauss_hermite(nodes);
  NodeSet s;
  std::vector<int> idx(K, 0);
  std::vector<double> g(K);
  while (true) {
    double w = 1.0;
    for (int d = 0; d < K; ++d) {
      g[d] = rule.nodes[idx[d]];
      w *= rule.weights[idx[d]];
    }
    std::vector<double> x(K, 0.0);
    for (int r = 0; r < K; ++r)
      for (int c = 0; c <= r; ++c) x[r] += a(r, c) * g[c];
    s.points.push_back(std::move(x));
    s.weights.push_back(w);
    int d = 0;
    while (d < K && ++idx[d] == nodes) idx[d++] = 0;
    if (d == K) break;
  }
  return s;
}

inline NodeSet sampled_nodes(const BlockCovariance& cov, std::size_t samples, std::uint64_t seed) {
  const CounterRng rng(seed);
  NodeSet s;
  std::vector<double> g, x;
  for (std::size_t i = 0; i < samples; ++i) {
    sample_gaussian(cov, rng, i, g, x);
    s.points.push_back(x);
    s.weights.push_back(1.0 / static_cast<double>(samples));
  }
  return s;
}

// h_s(x_i) = F(Σ_j w_j B(G_s(u_j, x_i))) for every outer point and every s.
inline std::vector<std::vector<double>> flow_outer_values(const FlowSpec& spec, const NodeSet& outer, const NodeSet& inner) {
  const int n = spec.cov.num_blocks(), K = spec.cov.dim();
  const std::size_t S = spec.s_grid.size();
  std::vector<std::vector<double>> h(S, std::vector<double>(outer.points.size()));
  for (std::size_t si = 0; si < S; ++si) {
    const double s = spec.s_grid[si];
    const double a = std::sqrt(s), b = std::sqrt(1.0 - s);
    std::vector<RealSmoother> real_g;
    std::vector<FastPoly> cplx_g;
    std::vector<cplx> coef(n);
    for (int j = 0; j < n; ++j) {
      if (spec.variant == FlowVariant::real) {
        const double r = spec.params.r[j];
        real_g.emplace_back(spec.real_fs[j], (1.0 - s) * (1.0 - r * r));
        coef[j] = r * b;
      } else {
        const cplx z = spec.params.param(j);
        cplx_g.emplace_back(gaussian_smoothing(spec.complex_fs[j].with_basis(Basis::monomial), -(s + z * z * (1.0 - s))));
        coef[j] = z * b;
      }
    }
    std::vector<std::exception_ptr> errors((outer.points.size() + 63) / 64);
    for_each_chunk(outer.points.size(), 64, default_threads(), [&](std::size_t begin, std::size_t end, std::size_t chunk) {
      try {
        std::vector<double> c(n), mr(K);
        std::vector<cplx> mc(K), scratch;
        for (std::size_t i = begin; i < end; ++i) {
          const auto& x = outer.points[i];
          double acc = 0.0;
          for (std::size_t q = 0; q < inner.points.size(); ++q) {
            const auto& u = inner.points[q];
            for (int j = 0; j < n; ++j) {
              const int off = spec.cov.offset(j), k = spec.cov.block_size(j);
              if (spec.variant == FlowVariant::real) {
                for (int d = off; d < off + k; ++d) mr[d] = a * u[d] + coef[j].real() * x[d];
                c[j] = real_g[j](std::span<const double>(mr).subspan(off, k), scratch);
              } else {
                for (int d = off; d < off + k; ++d) mc[d] = a * u[d] + coef[j] * x[d];
                c[j] = std::norm(cplx_g[j](std::span<const cplx>(mc).subspan(off, k), scratch));
              }
            }
            acc += inner.weights[q] * spec.B.value(c);
          }
          h[si][i] = spec.F.f(acc);
        }
      } catch (...) {
        errors[chunk] = std::current_exception();
      }
    });
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return h;
}

inline bool use_mc(const FlowSpec& spec) {
  const int K = spec.cov.dim();
  return spec.budget.force_mc || K > 2;
}

inline int outer_nodes_for(const FlowSpec& spec) { return spec.budget.nodes; }

inline int inner_nodes_for(const FlowSpec& spec) {
  const int K = spec.cov.dim();
  if (K == 1) return std::max(spec.budget.inner_nodes, 96);
  if (K == 2) return spec.budget.inner_nodes;
  return std::max(6, static_cast<int>(std::pow(4096.0, 1.0 / K)));
}

// One coordinate: adaptive Gauss–Kronrod at both levels, split at near-real zeros and indicator edges.
inline std::pair<std::vector<double>, std::vector<double>> adaptive_values_1d(const FlowSpec& spec) {
  const bool real = spec.variant == FlowVariant::real;
  const std::size_t S = spec.s_grid.size();
  std::vector<double> val(S), err(S);
  for (std::size_t si = 0; si < S; ++si) {
    const double s = spec.s_grid[si], a = std::sqrt(s), b = std::sqrt(1.0 - s);
    std::optional<RealSmoother> rg;
    FastPoly cg;
    cplx coef;
    std::vector<cplx> roots;
    std::vector<double> edges;
    if (real) {
      const double r = spec.params.r[0];
      rg.emplace(spec.real_fs[0], (1.0 - s) * (1.0 - r * r));
      coef = r * b;
      if (const auto* h = std::get_if<HalfspaceIndicator>(&spec.real_fs[0])) edges.push_back(h->threshold);
      if (const auto* iv = std::get_if<IntervalUnion>(&spec.real_fs[0]))
        for (const auto& [lo, hi] : iv->intervals) edges.insert(edges.end(), {lo, hi});
    } else {
      const cplx z = spec.params.param(0);
      const HermitePoly g = gaussian_smoothing(spec.complex_fs[0].with_basis(Basis::monomial), -(s + z * z * (1.0 - s)));
      cg = FastPoly(g);
      coef = z * b;
      if (g.degree() >= 1) roots = univariate_roots(g);
    }
    // zeros of m = shift + scale·t in the integration variable t
    auto breaks_for = [&](cplx shift, cplx scale) {
      std::vector<double> br;
      for (const cplx& root : roots) {
        const cplx t = (root - shift) / scale;
        if (std::abs(t.imag()) < 0.5) br.push_back(t.real());
      }
      for (double e : edges)
        if (std::isfinite(e)) br.push_back((e - shift.real()) / scale.real());
      return br;
    };
    std::vector<cplx> scratch;
    std::vector<double> c(1);
    auto B_at = [&](cplx m) {
      const double re = m.real();
      c[0] = real ? (*rg)(std::span<const double>(&re, 1), scratch) : std::norm(cg(std::span<const cplx>(&m, 1), scratch));
      return spec.B.value(c);
    };
    double inner_err = 0.0;
    auto outer_fn = [&](double x) {
      const cplx shift = coef * x;
      if (a == 0.0) return spec.F.f(B_at(shift));
      double e = 0.0;
      const double v = expect_normal_1d([&](double u) { return B_at(a * u + shift); }, breaks_for(shift, a), 1e-12, &e);
      // bounds the weighted inner error over [−10, 10]
      inner_err = std::max(inner_err, 20.0 * norm_pdf(x) * std::abs(spec.F.d1(v)) * e);
      return spec.F.f(v);
    };
    if (coef == cplx(0.0)) {
      val[si] = outer_fn(0.0);
      err[si] = inner_err;
      continue;
    }
    double e = 0.0;
    val[si] = expect_normal_1d(outer_fn, a == 0.0 ? breaks_for(0.0, coef) : std::vector<double>{}, 1e-9, &e);
    err[si] = e + inner_err;
  }
  return {val, err};
}

}  // namespace detail

struct FlowProfile {
  std::vector<double> s, value, stderr_, error;
  std::vector<double> pair_diff, pair_stderr;  // C(s_{k+1}) − C(s_k) and its paired stderr
  Method method = Method::quadrature;
  int nodes = 0, inner_nodes = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<AffineMap> affine;
};

inline FlowProfile flow_profile(const FlowSpec& spec) {
  detail::validate_flow(spec);
  FlowProfile prof;
  prof.s = spec.s_grid;
  if (spec.variant == FlowVariant::real) prof.affine = detail::check_ranges(spec);
  const int inner_n = detail::inner_nodes_for(spec);
  prof.inner_nodes = inner_n;
  const detail::NodeSet inner = detail::tensor_nodes(spec.cov, inner_n);
  const std::size_t S = spec.s_grid.size();
  if (detail::use_mc(spec)) {
    prof.method = Method::mc;
    prof.samples = spec.budget.samples;
    prof.seed = spec.budget.seed;
    if (spec.budget.samples < 2) throw DomainError("flow mc needs at least 2 samples");
    const detail::NodeSet outer = detail::sampled_nodes(spec.cov, spec.budget.samples, spec.budget.seed);
    const auto h = detail::flow_outer_values(spec, outer, inner);
    const double N = static_cast<double>(spec.budget.samples);
    auto mean_sd = [&](const std::function<double(std::size_t)>& v) {
      double m = 0.0, q = 0.0;
      for (std::size_t i = 0; i < spec.budget.samples; ++i) m += v(i);
      m /= N;
      for (std::size_t i = 0; i < spec.budget.samples; ++i) q += (v(i) - m) * (v(i) - m);
      return std::pair{m, std::sqrt(q / (N - 1.0) / N)};
    };
    for (std::size_t k = 0; k < S; ++k) {
      const auto [m, se] = mean_sd([&](std::size_t i) { return h[k][i]; });
      prof.value.push_back(m);
      prof.stderr_.push_back(se);
      prof.error.push_back(0.0);
    }
    for (std::size_t k = 0; k + 1 < S; ++k) {
      const auto [m, se] = mean_sd([&](std::size_t i) { return h[k + 1][i] - h[k][i]; });
      prof.pair_diff.push_back(m);
      prof.pair_stderr.push_back(se);
    }
    return prof;
  }
  prof.method = Method::quadrature;
  if (spec.cov.dim() == 1) {
    prof.inner_nodes = 0;
    std::tie(prof.value, prof.error) = detail::adaptive_values_1d(spec);
    prof.stderr_.assign(S, 0.0);
    for (std::size_t k = 0; k + 1 < S; ++k) {
      prof.pair_diff.push_back(prof.value[k + 1] - prof.value[k]);
      prof.pair_stderr.push_back(0.0);
    }
    return prof;
  }
  prof.nodes = detail::outer_nodes_for(spec);
  auto integrate = [&](int outer_n, const detail::NodeSet& in) {
    const detail::NodeSet outer = detail::tensor_nodes(spec.cov, outer_n);
    const auto h = detail::flow_outer_values(spec, outer, in);
    std::vector<double> v(S, 0.0);
    for (std::size_t k = 0; k < S; ++k)
      for (std::size_t i = 0; i < outer.weights.size(); ++i) v[k] += outer.weights[i] * h[k][i];
    return v;
  };
  prof.value = integrate(prof.nodes, inner);
  prof.stderr_.assign(S, 0.0);
  prof.error.assign(S, 0.0);
  if (spec.budget.estimate_error) {
    const int coarse = std::max(4, 2 * prof.nodes / 3), coarse_in = std::max(4, 2 * inner_n / 3);
    const std::vector<double> c = integrate(coarse, detail::tensor_nodes(spec.cov, coarse_in));
    for (std::size_t k = 0; k < S; ++k) prof.error[k] = std::abs(prof.value[k] - c[k]);
  }
  for (std::size_t k = 0; k + 1 < S; ++k) {
    prof.pair_diff.push_back(prof.value[k + 1] - prof.value[k]);
    prof.pair_stderr.push_back(0.0);
  }
  return prof;
}

inline double real_flow_value(const FlowSpec& spec, double s) {
  if (spec.variant != FlowVariant::real) throw HypothesisError("real_flow_value needs a real flow spec");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("s must lie in [0,1]");
  FlowSpec one = spec;
  one.s_grid = {s};
  one.budget.estimate_error = false;
  detail::validate_flow([&] {
    FlowSpec v = one;
    v.s_grid = default_s_grid();
    return v;
  }());
  detail::check_ranges(one);
  if (one.cov.dim() == 1 && !detail::use_mc(one)) return detail::adaptive_values_1d(one).first[0];
  const detail::NodeSet inner = detail::tensor_nodes(one.cov, detail::inner_nodes_for(one));
  const detail::NodeSet outer = detail::use_mc(one) ? detail::sampled_nodes(one.cov, one.budget.samples, one.budget.seed)
                                                    : detail::tensor_nodes(one.cov, detail::outer_nodes_for(one));
  const auto h = detail::flow_outer_values(one, outer, inner);
  double v = 0.0;
  for (std::size_t i = 0; i < outer.weights.size(); ++i) v += outer.weights[i] * h[0][i];
  return v;
}

inline double complex_flow_value(const FlowSpec& spec, double s) {
  if (spec.variant != FlowVariant::complex) throw HypothesisError("complex_flow_value needs a complex flow spec");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("s must lie in [0,1]");
  FlowSpec one = spec;
  one.s_grid = default_s_grid();
  detail::validate_flow(one);
  one.s_grid = {s};
  if (one.cov.dim() == 1 && !detail::use_mc(one)) return detail::adaptive_values_1d(one).first[0];
  const detail::NodeSet inner = detail::tensor_nodes(one.cov, detail::inner_nodes_for(one));
  const detail::NodeSet outer = detail::use_mc(one) ? detail::sampled_nodes(one.cov, one.budget.samples, one.budget.seed)
                                                    : detail::tensor_nodes(one.cov, detail::outer_nodes_for(one));
  const auto h = detail::flow_outer_values(one, outer, inner);
  double v = 0.0;
  for (std::size_t i = 0; i < outer.weights.size(); ++i) v += outer.weights[i] * h[0][i];
  return v;
}

struct FlowReport {
  FlowProfile profile;
  std::string direction;  // "nonincreasing" or "nondecreasing"
  std::vector<bool> pair_ok;
  bool monotone = false;
  double gap = 0.0;  // C(0) − C(1)
  Comparison global;
  double endpoint_lhs_diff = 0.0, endpoint_rhs_diff = 0.0;
  bool endpoints_match = false;
  bool gap_consistent = false;
  Verdict verdict = Verdict::inconclusive;
};

inline FlowReport certify_monotone(const FlowSpec& spec) {
  FlowReport rep;
  rep.profile = flow_profile(spec);
  const FlowProfile& pr = rep.profile;
  const bool decreasing = spec.variant == FlowVariant::real;
  rep.direction = decreasing ? "nonincreasing" : "nondecreasing";
  const double sign = decreasing ? -1.0 : 1.0;
  rep.monotone = true;
  for (std::size_t k = 0; k < pr.pair_diff.size(); ++k) {
    const double scale = 1.0 + std::abs(pr.value[k]) + std::abs(pr.value[k + 1]);
    const double tol = pr.method == Method::mc ? 3.0 * pr.pair_stderr[k]
                                               : spec.budget.tol * scale + pr.error[k] + pr.error[k + 1];
    const bool ok = sign * pr.pair_diff[k] >= -tol;
    rep.pair_ok.push_back(ok);
    rep.monotone = rep.monotone && ok;
  }
  Budget gb;
  gb.seed = spec.budget.seed;
  gb.tol = spec.budget.tol;
  if (spec.variant == FlowVariant::real)
    rep.global = verify_fb_real(FunctionPair{spec.F, spec.B}, spec.params, spec.cov, spec.real_fs, Direction::reverse, gb);
  else
    rep.global = verify_fb_complex(spec.F, spec.B, spec.params, spec.cov, spec.complex_fs, gb);
  const bool has0 = pr.s.front() == 0.0, has1 = pr.s.back() == 1.0;
  const double c0 = pr.value.front(), c1 = pr.value.back();
  rep.gap = c0 - c1;
  double tol0 = 0.0, tol1 = 0.0;
  if (pr.method == Method::mc) {
    tol0 = spec.budget.tol * (1.0 + std::abs(c0)) + 3.0 * pr.stderr_.front();
    tol1 = spec.budget.tol * (1.0 + std::abs(c1)) + 3.0 * pr.stderr_.back();
  } else {
    tol0 = 1e-7 * (1.0 + std::abs(c0)) + pr.error.front() + rep.global.error_estimate;
    tol1 = 1e-7 * (1.0 + std::abs(c1)) + pr.error.back() + rep.global.error_estimate;
  }
  if (rep.global.method == Method::mc) {
    tol0 += 3.0 * rep.global.stderr_;
    tol1 += 3.0 * rep.global.stderr_;
  }
  rep.endpoint_lhs_diff = has0 ? std::abs(c0 - rep.global.lhs) : 0.0;
  rep.endpoint_rhs_diff = has1 ? std::abs(c1 - rep.global.rhs) : 0.0;
  rep.endpoints_match = (!has0 || rep.endpoint_lhs_diff <= tol0) && (!has1 || rep.endpoint_rhs_diff <= tol1);
  // the flow orientation makes −sign·gap the margin of the global comparison
  const double flow_margin = -sign * rep.gap;
  rep.gap_consistent = std::abs(flow_margin) <= tol0 + tol1 || rep.global.verdict == Verdict::inconclusive ||
                       (flow_margin >= 0) == (rep.global.margin >= 0);
  if (!rep.monotone) rep.verdict = Verdict::violated;
  else rep.verdict = rep.endpoints_match ? Verdict::holds : Verdict::inconclusive;
  return rep;
}

}  // namespace hypergauss
