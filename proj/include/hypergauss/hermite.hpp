#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace hypergauss {

using cplx = std::complex<double>;

inline int& degree_cap() {
  static int cap = 16;
  return cap;
}

struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {
    for (int v : exponents)
      if (v < 0) throw MalformedInput("multi-index entries must be nonnegative");
    degree_ = 0;
    for (int v : exponents) degree_ += v;
  }
  MultiIndex(std::initializer_list<int> e) : MultiIndex(std::vector<int>(e)) {}

  static MultiIndex zero(int dim) { return MultiIndex(std::vector<int>(dim, 0)); }

  int degree() const { return degree_; }
  std::size_t size() const { return exponents.size(); }
  int operator[](std::size_t i) const { return exponents[i]; }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.exponents == b.exponents; }
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) { return a.exponents <=> b.exponents; }

 private:
  int degree_ = 0;
};

enum class Basis { hermite, monomial };

inline const char* basis_name(Basis b) { return b == Basis::hermite ? "hermite" : "monomial"; }

// Sparse polynomial in dim variables; terms never hold an exact zero.
class HermitePoly {
 public:
  using TermMap = std::map<MultiIndex, cplx>;

  HermitePoly() = default;
  HermitePoly(int dim, Basis basis) : dim_(dim), basis_(basis) {
    if (dim <= 0) throw DimensionError("polynomial dimension must be positive");
  }

  static HermitePoly constant(int dim, cplx c, Basis basis = Basis::hermite) {
    HermitePoly p(dim, basis);
    p.add_term(MultiIndex::zero(dim), c);
    return p;
  }

  int dim() const { return dim_; }
  Basis basis() const { return basis_; }
  const TermMap& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [b, c] : terms_) d = std::max(d, b.degree());
    return d;
  }

  int min_degree() const {
    int d = terms_.empty() ? 0 : 1 << 30;
    for (const auto& [b, c] : terms_) d = std::min(d, b.degree());
    return d;
  }

  cplx coefficient(const MultiIndex& b) const {
    auto it = terms_.find(b);
    return it == terms_.end() ? cplx{} : it->second;
  }

  void add_term(const MultiIndex& b, cplx c) {
    if (static_cast<int>(b.size()) != dim_) throw DimensionError("multi-index length differs from polynomial dim");
    if (c == cplx{}) return;
    auto [it, inserted] = terms_.try_emplace(b, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [b, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  HermitePoly with_basis(Basis b) const {
    HermitePoly r = *this;
    r.basis_ = b;
    return r;
  }

 private:
  int dim_ = 1;
  Basis basis_ = Basis::hermite;
  TermMap terms_;
};

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double double_factorial_odd(int k) {  // (k-1)!! for even k
  double r = 1.0;
  for (int i = k - 1; i > 1; i -= 2) r *= i;
  return r;
}

inline void check_cap(int degree) {
  if (degree > degree_cap())
    throw CapacityError("polynomial degree " + std::to_string(degree) + " exceeds cap " + std::to_string(degree_cap()));
}

// Univariate expansion of E(x + N)^n with E N^2 = kappa: pairs (power of x, coefficient).
inline std::vector<std::pair<int, cplx>> smoothing_row(int n, cplx kappa) {
  std::vector<std::pair<int, cplx>> row;
  cplx kpow = 1.0;
  for (int k = 0; k <= n; k += 2) {
    row.emplace_back(n - k, binomial(n, k) * double_factorial_odd(k) * kpow);
    kpow *= kappa;
  }
  return row;
}

}  // namespace detail

// Monomial-basis polynomial x ↦ E f(x + N) with N centered Gaussian, independent
// coordinates, E N_b^2 = kappa (complex kappa allowed: the map is polynomial in kappa).
inline HermitePoly gaussian_smoothing(const HermitePoly& f, cplx kappa) {
  if (f.basis() != Basis::monomial) throw MalformedInput("gaussian_smoothing expects monomial basis");
  detail::check_cap(f.degree());
  HermitePoly r(f.dim(), Basis::monomial);
  const int dim = f.dim();
  for (const auto& [beta, c] : f.terms()) {
    std::vector<std::vector<std::pair<int, cplx>>> rows;
    for (int b = 0; b < dim; ++b) rows.push_back(detail::smoothing_row(beta[b], kappa));
    std::vector<std::size_t> pick(dim, 0);
    std::vector<int> e(dim);
    while (true) {
      cplx coef = c;
      for (int b = 0; b < dim; ++b) {
        e[b] = rows[b][pick[b]].first;
        coef *= rows[b][pick[b]].second;
      }
      r.add_term(MultiIndex(e), coef);
      int b = 0;
      while (b < dim && ++pick[b] == rows[b].size()) pick[b++] = 0;
      if (b == dim) break;
    }
  }
  return r;
}

// H_beta(x) = E(x + i xi)^beta in the monomial basis.
inline HermitePoly hermite_basis(const MultiIndex& beta) {
  detail::check_cap(beta.degree());
  HermitePoly mono(static_cast<int>(beta.size()), Basis::monomial);
  mono.add_term(beta, 1.0);
  return gaussian_smoothing(mono, -1.0);
}

inline HermitePoly to_monomial(const HermitePoly& f) {
  if (f.basis() == Basis::monomial) return f;
  return gaussian_smoothing(f.with_basis(Basis::monomial), -1.0);
}

inline HermitePoly to_hermite(const HermitePoly& f) {
  if (f.basis() == Basis::hermite) return f;
  return gaussian_smoothing(f, 1.0).with_basis(Basis::hermite);
}

inline HermitePoly to_basis(const HermitePoly& f, Basis b) { return b == Basis::hermite ? to_hermite(f) : to_monomial(f); }

// Probabilists' He_0..He_n at a (complex) point.
inline std::vector<cplx> hermite_values(cplx x, int n) {
  std::vector<cplx> h(n + 1);
  h[0] = 1.0;
  if (n >= 1) h[1] = x;
  for (int k = 1; k < n; ++k) h[k + 1] = x * h[k] - static_cast<double>(k) * h[k - 1];
  return h;
}

template <class Vec>
cplx evaluate(const HermitePoly& f, const Vec& x) {
  if (static_cast<int>(std::size(x)) != f.dim()) throw DimensionError("evaluate: point length differs from dim");
  const int dim = f.dim();
  const int deg = f.degree();
  std::vector<std::vector<cplx>> table(dim);
  for (int b = 0; b < dim; ++b) {
    const cplx xb = x[b];
    if (f.basis() == Basis::hermite) {
      table[b] = hermite_values(xb, deg);
    } else {
      table[b].resize(deg + 1);
      table[b][0] = 1.0;
      for (int k = 1; k <= deg; ++k) table[b][k] = table[b][k - 1] * xb;
    }
  }
  cplx total = 0.0;
  for (const auto& [beta, c] : f.terms()) {
    cplx t = c;
    for (int b = 0; b < dim; ++b)
      if (beta[b]) t *= table[b][beta[b]];
    total += t;
  }
  return total;
}

inline cplx evaluate(const HermitePoly& f, std::initializer_list<cplx> x) { return evaluate(f, std::vector<cplx>(x)); }

inline HermitePoly multiply(const HermitePoly& f, const HermitePoly& g) {
  if (f.dim() != g.dim()) throw DimensionError("multiply: dimensions differ");
  detail::check_cap(f.degree() + g.degree());
  const HermitePoly a = to_monomial(f), b = to_monomial(g);
  HermitePoly r(f.dim(), Basis::monomial);
  std::vector<int> e(f.dim());
  for (const auto& [ba, ca] : a.terms())
    for (const auto& [bb, cb] : b.terms()) {
      for (int k = 0; k < f.dim(); ++k) e[k] = ba[k] + bb[k];
      r.add_term(MultiIndex(e), ca * cb);
    }
  return r;
}

// Ornstein–Uhlenbeck generator L = Δ − x·∇: c_beta ↦ −|beta| c_beta; result in hermite basis.
inline HermitePoly ou_generator(const HermitePoly& f) {
  const HermitePoly h = to_hermite(f);
  HermitePoly r(h.dim(), Basis::hermite);
  for (const auto& [beta, c] : h.terms()) r.add_term(beta, -static_cast<double>(beta.degree()) * c);
  return r;
}

inline HermitePoly conj(const HermitePoly& f) {
  HermitePoly r(f.dim(), f.basis());
  for (const auto& [beta, c] : f.terms()) r.add_term(beta, std::conj(c));
  return r;
}

inline HermitePoly scale(const HermitePoly& f, cplx s) {
  HermitePoly r(f.dim(), f.basis());
  for (const auto& [beta, c] : f.terms()) r.add_term(beta, s * c);
  return r;
}

inline HermitePoly add(const HermitePoly& f, const HermitePoly& g) {
  if (f.dim() != g.dim()) throw DimensionError("add: dimensions differ");
  const HermitePoly b = to_basis(g, f.basis());
  HermitePoly r = f;
  for (const auto& [beta, c] : b.terms()) r.add_term(beta, c);
  return r;
}

// Places f (dim k) on coordinates [offset, offset + k) of a total-dim polynomial.
inline HermitePoly embed(const HermitePoly& f, int total_dim, int offset) {
  if (offset < 0 || offset + f.dim() > total_dim) throw DimensionError("embed: block outside ambient dimension");
  HermitePoly r(total_dim, f.basis());
  for (const auto& [beta, c] : f.terms()) {
    std::vector<int> e(total_dim, 0);
    for (int k = 0; k < f.dim(); ++k) e[offset + k] = beta[k];
    r.add_term(MultiIndex(e), c);
  }
  return r;
}

// True when every coefficient of f − g is within rel_tol·max|coeff|.
inline bool approx_equal(const HermitePoly& f, const HermitePoly& g, double rel_tol = 1e-12) {
  if (f.dim() != g.dim() || f.basis() != g.basis()) return false;
  const double scale_ = std::max({f.max_abs_coefficient(), g.max_abs_coefficient(), 1e-300});
  std::map<MultiIndex, cplx> diff = f.terms();
  for (const auto& [beta, c] : g.terms()) diff[beta] -= c;
  for (const auto& [beta, c] : diff)
    if (std::abs(c) > rel_tol * scale_) return false;
  return true;
}

// True when f is supported on a single Hermite degree; writes it to *degree.
inline bool is_homogeneous_chaos(const HermitePoly& f, int* degree) {
  const HermitePoly h = to_hermite(f);
  if (h.empty()) return false;
  const int d = h.degree();
  if (h.min_degree() != d) return false;
  if (degree) *degree = d;
  return true;
}

inline std::string to_text(const HermitePoly& f) {
  std::ostringstream out;
  out << "dim=" << f.dim() << " basis=" << basis_name(f.basis()) << '\n';
  char buf[64];
  for (const auto& [beta, c] : f.terms()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g :", c.real(), c.imag());
    out << buf;
    for (int e : beta.exponents) out << ' ' << e;
    out << '\n';
  }
  return out.str();
}

inline HermitePoly from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int dim = 0;
  Basis basis = Basis::hermite;
  bool header = false;
  HermitePoly f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!header) {
      char bname[32] = {0};
      if (std::sscanf(line.c_str() + first, "dim=%d basis=%31s", &dim, bname) != 2 || dim <= 0)
        throw MalformedInput("polynomial header must read 'dim=<k> basis=<hermite|monomial>'");
      const std::string b = bname;
      if (b == "hermite") basis = Basis::hermite;
      else if (b == "monomial") basis = Basis::monomial;
      else throw MalformedInput("unknown basis '" + b + "'");
      f = HermitePoly(dim, basis);
      header = true;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw MalformedInput("line " + std::to_string(lineno) + ": missing ':'");
    std::istringstream lhs(line.substr(0, colon)), rhs(line.substr(colon + 1));
    std::string re_s, im_s;
    if (!(lhs >> re_s >> im_s)) throw MalformedInput("line " + std::to_string(lineno) + ": expected 're im'");
    char* end = nullptr;
    const double re = std::strtod(re_s.c_str(), &end);
    if (*end) throw MalformedInput("line " + std::to_string(lineno) + ": bad real part");
    const double im = std::strtod(im_s.c_str(), &end);
    if (*end) throw MalformedInput("line " + std::to_string(lineno) + ": bad imaginary part");
    std::vector<int> e;
    int v;
    while (rhs >> v) e.push_back(v);
    if (!rhs.eof()) throw MalformedInput("line " + std::to_string(lineno) + ": bad exponent list");
    if (static_cast<int>(e.size()) != dim) throw MalformedInput("line " + std::to_string(lineno) + ": exponent count differs from dim");
    f.add_term(MultiIndex(e), cplx(re, im));
  }
  if (!header) throw MalformedInput("polynomial text has no header");
  return f;
}

// Complex roots of a univariate polynomial (Durand–Kerner on monomial coefficients).
inline std::vector<cplx> univariate_roots(const HermitePoly& f) {
  if (f.dim() != 1) throw DimensionError("univariate_roots expects dim 1");
  const HermitePoly m = to_monomial(f);
  const int n = m.degree();
  if (n == 0) return {};
  std::vector<cplx> a(n + 1);
  for (const auto& [beta, c] : m.terms()) a[beta[0]] = c;
  for (auto& c : a) c /= a[n];
  double radius = 0.0;
  for (int k = 0; k < n; ++k) radius = std::max(radius, std::abs(a[k]));
  radius = 1.0 + radius;
  std::vector<cplx> z(n);
  const cplx seed(0.4, 0.9);
  for (int k = 0; k < n; ++k) z[k] = radius * std::pow(seed, k + 1) / std::abs(std::pow(seed, k + 1));
  auto p = [&](cplx x) {
    cplx v = 1.0;
    for (int k = n - 1; k >= 0; --k) v = v * x + a[k];
    return v;
  };
  for (int iter = 0; iter < 2000; ++iter) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      cplx den = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) den *= (z[i] - z[j]);
      if (den == cplx{}) den = 1e-300;
      const cplx step = p(z[i]) / den;
      z[i] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < 1e-15 * radius) break;
  }
  return z;
}

}  // namespace hypergauss
