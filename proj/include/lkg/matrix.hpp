#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"

namespace lkg {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  void fill(double v) { data.assign(data.size(), v); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool operator==(const Matrix&) const = default;
};

/// out(i, :) += x(i, :) * W^T, where W is (out_cols x in_cols).
inline void add_mul_transposed(const Matrix& x, const Matrix& w, Matrix& out) {
  if (x.cols != w.cols || out.rows != x.rows || out.cols != w.rows) {
    throw UsageError("add_mul_transposed: shape mismatch");
  }
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.data.data() + i * x.cols;
    double* oi = out.data.data() + i * out.cols;
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double* wo = w.data.data() + o * w.cols;
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) s += xi[k] * wo[k];
      oi[o] += s;
    }
  }
}

/// out += x * W, where x is (n x out_rows_of_W) and W is (rows x cols): out(i,:) += sum_o x(i,o) W(o,:).
inline void add_mul(const Matrix& x, const Matrix& w, Matrix& out) {
  if (x.cols != w.rows || out.rows != x.rows || out.cols != w.cols) {
    throw UsageError("add_mul: shape mismatch");
  }
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* oi = out.data.data() + i * out.cols;
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double g = x(i, o);
      if (g == 0.0) continue;
      const double* wo = w.data.data() + o * w.cols;
      for (std::size_t k = 0; k < w.cols; ++k) oi[k] += g * wo[k];
    }
  }
}

/// grad += a^T * b, with a (n x p) and b (n x q) giving a (p x q) accumulation.
inline void add_transposed_product(const Matrix& a, const Matrix& b, Matrix& grad) {
  if (a.rows != b.rows || grad.rows != a.cols || grad.cols != b.cols) {
    throw UsageError("add_transposed_product: shape mismatch");
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double v = a(i, p);
      if (v == 0.0) continue;
      double* gp = grad.data.data() + p * grad.cols;
      const double* bi = b.data.data() + i * b.cols;
      for (std::size_t q = 0; q < b.cols; ++q) gp[q] += v * bi[q];
    }
  }
}

} // namespace lkg
