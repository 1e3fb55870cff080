#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace hypergauss {

struct Validation {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool ok = false;
  std::string reason;
};

// Joint covariance of n standard-normal blocks of sizes k_1..k_n.
class BlockCovariance {
 public:
  BlockCovariance() = default;
  BlockCovariance(std::vector<int> block_sizes, Matrix matrix) : blocks_(std::move(block_sizes)), m_(std::move(matrix)) {
    if (blocks_.empty()) throw MalformedInput("covariance needs at least one block");
    int total = 0;
    for (int k : blocks_) {
      if (k <= 0) throw MalformedInput("block sizes must be positive");
      offsets_.push_back(total);
      total += k;
    }
    if (m_.rows() != static_cast<std::size_t>(total) || m_.cols() != static_cast<std::size_t>(total))
      throw MalformedInput("covariance matrix is " + std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()) +
                           " but block sizes sum to " + std::to_string(total));
    if (m_.asymmetry() > 1e-12) throw MalformedInput("covariance matrix is not symmetric");
    m_.symmetrize();
    const EigenResult e = jacobi_eigen(m_, false);
    v_.lambda_min = e.values.front();
    v_.lambda_max = e.values.back();
    v_.ok = true;
    if (!(v_.lambda_min > 1e-10)) {
      v_.ok = false;
      v_.reason = "covariance is not full rank";
    }
    for (std::size_t j = 0; j < blocks_.size() && v_.ok; ++j)
      for (int a = 0; a < blocks_[j]; ++a)
        for (int b = 0; b < blocks_[j]; ++b) {
          const double want = a == b ? 1.0 : 0.0;
          if (std::abs(m_(offsets_[j] + a, offsets_[j] + b) - want) > 1e-12) {
            v_.ok = false;
            v_.reason = "diagonal block " + std::to_string(j) + " is not the identity";
          }
        }
    if (v_.ok) factor_ = cholesky(m_);
  }

  static BlockCovariance identity(std::vector<int> blocks) {
    const int total = std::accumulate(blocks.begin(), blocks.end(), 0);
    return BlockCovariance(std::move(blocks), Matrix::identity(total));
  }

  // Two blocks of size k with cov(ξ_1, ξ_2) = rho·Id.
  static BlockCovariance correlated_pair(int k, double rho) {
    Matrix m = Matrix::identity(2 * k);
    for (int a = 0; a < k; ++a) m(a, k + a) = m(k + a, a) = rho;
    return BlockCovariance({k, k}, m);
  }

  // n scalar blocks with all pairwise correlations rho.
  static BlockCovariance equicorrelated(int n, double rho) {
    Matrix m(n, n, rho);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return BlockCovariance(std::vector<int>(n, 1), m);
  }

  const std::vector<int>& blocks() const { return blocks_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int block_size(int j) const { return blocks_.at(j); }
  int offset(int j) const { return offsets_.at(j); }
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  const Validation& validation() const { return v_; }
  double lambda_min() const { return v_.lambda_min; }
  double lambda_max() const { return v_.lambda_max; }

  const Matrix& factor() const {
    if (!v_.ok) throw FactorizationError("covariance failed validation: " + v_.reason);
    return factor_;
  }

  // Rows offset(j)..offset(j)+k_j−1 of the factor; A_j A_jᵀ = Id.
  Matrix block_rows(int j) const {
    const Matrix& a = factor();
    Matrix r(blocks_.at(j), dim());
    for (int i = 0; i < blocks_[j]; ++i)
      for (int c = 0; c < dim(); ++c) r(i, c) = a(offsets_[j] + i, c);
    return r;
  }

  // Same law with blocks reordered by perm (new block i = old block perm[i]).
  BlockCovariance permuted(const std::vector<int>& perm) const {
    std::vector<int> nb;
    std::vector<int> coords;
    for (int j : perm) {
      nb.push_back(blocks_.at(j));
      for (int a = 0; a < blocks_[j]; ++a) coords.push_back(offsets_[j] + a);
    }
    Matrix m(coords.size(), coords.size());
    for (std::size_t a = 0; a < coords.size(); ++a)
      for (std::size_t b = 0; b < coords.size(); ++b) m(a, b) = m_(coords[a], coords[b]);
    return BlockCovariance(nb, m);
  }

 private:
  std::vector<int> blocks_;
  std::vector<int> offsets_;
  Matrix m_;
  Matrix factor_;
  Validation v_;
};

inline Validation validate(const BlockCovariance& cov) { return cov.validation(); }

inline const Matrix& factor(const BlockCovariance& cov) { return cov.factor(); }

// Random correlation structure with identity diagonal blocks.
inline BlockCovariance random_block_covariance(std::mt19937_64& rng, std::vector<int> blocks, double spread = 0.6) {
  int K = 0;
  for (int k : blocks) K += k;
  std::normal_distribution<double> g;
  Matrix a(K, K + 2);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K + 2; ++j) a(i, j) = g(rng);
  Matrix s = a * a.transpose();
  Matrix m(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) m(i, j) = s(i, j) / std::sqrt(s(i, i) * s(j, j));
  m = m * spread + Matrix::identity(K) * (1.0 - spread);
  // whiten each diagonal block
  Matrix w(K, K);
  int off = 0;
  for (int k : blocks) {
    std::vector<std::size_t> idx;
    for (int i = 0; i < k; ++i) idx.push_back(off + i);
    const Matrix l = cholesky(m.submatrix(idx));
    Matrix inv(k, k);
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < k; ++r) {
        double v = r == c ? 1.0 : 0.0;
        for (int t = 0; t < r; ++t) v -= l(r, t) * inv(t, c);
        inv(r, c) = v / l(r, r);
      }
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) w(off + r, off + c) = inv(r, c);
    off += k;
  }
  Matrix out = w * m * w.transpose();
  out.symmetrize();
  for (int i = 0; i < K; ++i) out(i, i) = 1.0;
  return BlockCovariance(blocks, out);
}

// Whitespace-separated rows; blank lines and '#' comments ignored.
inline BlockCovariance parse_covariance(const std::string& text, const std::vector<int>& blocks) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end || tok.empty()) throw MalformedInput("covariance entry '" + tok + "' is not a number");
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw MalformedInput("covariance file is empty");
  for (const auto& r : rows)
    if (r.size() != rows.size()) throw MalformedInput("covariance matrix is not square");
  return BlockCovariance(blocks, Matrix::from_rows(rows));
}

inline BlockCovariance load_covariance(const std::string& path, const std::vector<int>& blocks) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open covariance file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_covariance(ss.str(), blocks);
}

// Isserlis/Wick moment E ∏ x_i^{gamma_i}: pair the smallest unpaired coordinate
// with every other occurrence, memoized on the residual exponent vector.
class WickEngine {
 public:
  explicit WickEngine(const Matrix& cov) : cov_(cov) {}

  double moment(const std::vector<int>& gamma) {
    int total = 0;
    for (int g : gamma) {
      if (g < 0) throw MalformedInput("negative exponent in moment request");
      total += g;
    }
    if (total > degree_cap()) throw CapacityError("moment degree exceeds cap");
    if (gamma.size() != cov_.rows()) throw DimensionError("moment request length differs from covariance size");
    return rec(gamma, total);
  }

 private:
  double rec(const std::vector<int>& g, int total) {
    if (total == 0) return 1.0;
    if (total % 2 == 1) return 0.0;
    auto it = memo_.find(g);
    if (it != memo_.end()) return it->second;
    std::size_t i = 0;
    while (g[i] == 0) ++i;
    std::vector<int> rest = g;
    --rest[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < rest.size(); ++j) {
      if (rest[j] == 0 || cov_(i, j) == 0.0) continue;
      const int mult = rest[j];
      --rest[j];
      sum += mult * cov_(i, j) * rec(rest, total - 2);
      ++rest[j];
    }
    memo_.emplace(g, sum);
    return sum;
  }

  const Matrix& cov_;
  std::map<std::vector<int>, double> memo_;
};

inline double wick_moment(const MultiIndex& gamma, const BlockCovariance& cov) {
  WickEngine w(cov.matrix());
  return w.moment(gamma.exponents);
}

// E p(ξ) for a polynomial over all K coordinates.
inline cplx expect_polynomial_exact(const HermitePoly& p, const BlockCovariance& cov) {
  if (p.dim() != cov.dim()) throw DimensionError("polynomial dim differs from covariance size");
  const HermitePoly m = to_monomial(p);
  if (m.degree() > degree_cap()) throw CapacityError("moment degree exceeds cap");
  WickEngine w(cov.matrix());
  cplx total = 0.0;
  for (const auto& [beta, c] : m.terms()) total += c * w.moment(beta.exponents);
  return total;
}

// E ∏_j f_j(ξ_j).
inline cplx expect_product_exact(const std::vector<HermitePoly>& polys, const BlockCovariance& cov) {
  if (static_cast<int>(polys.size()) != cov.num_blocks()) throw DimensionError("one polynomial per block required");
  int total_degree = 0;
  for (std::size_t j = 0; j < polys.size(); ++j) {
    if (polys[j].dim() != cov.block_size(static_cast<int>(j))) throw DimensionError("polynomial dim differs from block size");
    total_degree += polys[j].degree();
  }
  if (total_degree > degree_cap()) throw CapacityError("product degree exceeds cap");
  HermitePoly prod = HermitePoly::constant(cov.dim(), 1.0, Basis::monomial);
  for (std::size_t j = 0; j < polys.size(); ++j)
    prod = multiply(prod, embed(to_monomial(polys[j]), cov.dim(), cov.offset(static_cast<int>(j))));
  return expect_polynomial_exact(prod, cov);
}

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool tainted = false;
};

inline int& default_threads() {
  static int threads = 1;
  return threads;
}

namespace detail {

struct Welford {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  void push(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Welford& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
};

}  // namespace detail

// x = A·g with g from the counter-based stream; sample i always uses position i.
inline void sample_gaussian(const BlockCovariance& cov, const CounterRng& rng, std::uint64_t i, std::vector<double>& g,
                            std::vector<double>& x) {
  const int K = cov.dim();
  const Matrix& a = cov.factor();
  g.resize(K);
  x.assign(K, 0.0);
  for (int d = 0; d < K; ++d) g[d] = rng.normal(i, d);
  for (int r = 0; r < K; ++r)
    for (int c = 0; c <= r; ++c) x[r] += a(r, c) * g[c];
}

// Runs body(begin, end, chunk_index) over fixed-size chunks on up to `threads` workers.
template <class Body>
void for_each_chunk(std::size_t n, std::size_t chunk, int threads, Body&& body) {
  const std::size_t chunks = (n + chunk - 1) / chunk;
  threads = std::max(1, std::min<int>(threads, static_cast<int>(chunks)));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c * chunk, std::min(n, (c + 1) * chunk), c);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t c = t; c < chunks; c += threads) body(c * chunk, std::min(n, (c + 1) * chunk), c);
    });
  for (auto& th : pool) th.join();
}

template <class Fn>
McEstimate expect_mc(Fn&& fn, const BlockCovariance& cov, std::size_t samples, std::uint64_t seed, int threads = 0) {
  if (samples < 2) throw DomainError("expect_mc needs at least 2 samples");
  if (threads <= 0) threads = default_threads();
  const CounterRng rng(seed);
  constexpr std::size_t chunk = 4096;
  const std::size_t chunks = (samples + chunk - 1) / chunk;
  std::vector<detail::Welford> parts(chunks);
  std::vector<char> taint(chunks, 0);
  for_each_chunk(samples, chunk, threads, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::vector<double> g, x;
    detail::Welford w;
    for (std::size_t i = begin; i < end; ++i) {
      sample_gaussian(cov, rng, i, g, x);
      const double v = static_cast<double>(fn(std::span<const double>(x)));
      if (!std::isfinite(v)) {
        taint[c] = 1;
        continue;
      }
      w.push(v);
    }
    parts[c] = w;
  });
  detail::Welford all;
  for (const auto& p : parts) all.merge(p);
  McEstimate r;
  r.samples = samples;
  r.seed = seed;
  r.tainted = std::any_of(taint.begin(), taint.end(), [](char t) { return t != 0; });
  r.estimate = all.mean;
  r.stderr_ = all.n > 1 ? std::sqrt(all.m2 / (all.n - 1.0) / all.n) : 0.0;
  return r;
}

inline bool quadrature_feasible(int dims, int nodes_per_dim) {
  if (dims > 6 || nodes_per_dim < 1) return false;
  return std::pow(static_cast<double>(nodes_per_dim), dims) <= 1e7;
}

// Tensor Gauss–Hermite estimate of E fn(ξ); nullopt asks the caller to fall back to MC.
template <class Fn>
auto expect_quadrature(Fn&& fn, const BlockCovariance& cov, int nodes_per_dim)
    -> std::optional<decltype(fn(std::span<const double>()))> {
  const int K = cov.dim();
  if (!quadrature_feasible(K, nodes_per_dim)) return std::nullopt;
  const Matrix& a = cov.factor();
  std::vector<double> x(K);
  return tensor_gauss_hermite(
      [&](std::span<const double> g) {
        for (int r = 0; r < K; ++r) {
          double s = 0.0;
          for (int c = 0; c <= r; ++c) s += a(r, c) * g[c];
          x[r] = s;
        }
        return fn(std::span<const double>(x));
      },
      K, nodes_per_dim);
}

}  // namespace hypergauss
