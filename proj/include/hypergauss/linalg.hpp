#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace hypergauss {

// Dense row-major real matrix; sizes here stay below ~100.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw MalformedInput("ragged matrix rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw DimensionError("matrix product size mismatch");
    Matrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  std::vector<double> operator*(const std::vector<double>& v) const {
    if (cols_ != v.size()) throw DimensionError("matrix-vector size mismatch");
    std::vector<double> r(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
  }

  Matrix operator-(const Matrix& o) const {
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  Matrix operator+(const Matrix& o) const {
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }

  Matrix operator*(double s) const {
    Matrix r = *this;
    for (double& v : r.data_) v *= s;
    return r;
  }

  Matrix submatrix(const std::vector<std::size_t>& idx) const {
    Matrix r(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) r(i, j) = (*this)(idx[i], idx[j]);
    return r;
  }

  double asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  void symmetrize() {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) {
        const double a = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = a;
        (*this)(j, i) = a;
      }
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct EigenResult {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
};

// Cyclic Jacobi rotations; stops once the off-diagonal Frobenius norm drops
// below 1e-12 times the Frobenius norm of the input.
inline EigenResult jacobi_eigen(Matrix a, bool want_vectors = true) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw DimensionError("eigen-solver needs a square matrix");
  Matrix v = Matrix::identity(n);
  const double scale = a.frobenius();
  const double target = 1e-12 * (scale > 0.0 ? scale : 1.0);
  auto off = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 100 && off() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  EigenResult r{std::vector<double>(n), Matrix(n, want_vectors ? n : 0)};
  for (std::size_t i = 0; i < n; ++i) {
    r.values[i] = a(order[i], order[i]);
    if (want_vectors)
      for (std::size_t k = 0; k < n; ++k) r.vectors(k, i) = v(k, order[i]);
  }
  return r;
}

inline double min_eigenvalue(const Matrix& m) { return jacobi_eigen(m, false).values.front(); }

// Lower-triangular L with L Lᵀ = m.
inline Matrix cholesky(const Matrix& m) {
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw FactorizationError("matrix is not numerically positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

// Minimal-eigenvalue direction with a deterministic representative: among
// eigenvectors sharing the minimal eigenvalue (to 1e-12 relative) pick the one
// with the largest |first coordinate|, then make its first nonzero entry positive.
struct MinEigen {
  double value = 0.0;
  std::vector<double> vector;
};

inline MinEigen min_eigen(const Matrix& m) {
  EigenResult e = jacobi_eigen(m, true);
  const std::size_t n = m.rows();
  MinEigen r;
  if (n == 0) return r;
  r.value = e.values.front();
  const double tie = 1e-12 * (1.0 + std::abs(e.values.back()));
  std::size_t best = 0;
  for (std::size_t i = 1; i < n && e.values[i] - r.value <= tie; ++i)
    if (std::abs(e.vectors(0, i)) > std::abs(e.vectors(0, best)) + 1e-14) best = i;
  r.vector.resize(n);
  double norm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r.vector[k] = e.vectors(k, best);
    norm += r.vector[k] * r.vector[k];
  }
  norm = std::sqrt(norm);
  double sign = 1.0;
  for (double x : r.vector)
    if (std::abs(x) > 1e-14) {
      sign = x > 0 ? 1.0 : -1.0;
      break;
    }
  for (double& x : r.vector) x *= sign / norm;
  return r;
}

inline double psd_threshold(double lambda_max) { return -1e-9 * (1.0 + std::abs(lambda_max)); }

}  // namespace hypergauss
