#pragma once

#include <cstddef>
#include <vector>

namespace spikemark {

// Dense row-major matrix of doubles. Carrier for weights, activations and
// gradients throughout the library.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }

  double* row(size_t r) { return data.data() + r * cols; }
  const double* row(size_t r) const { return data.data() + r * cols; }

  size_t size() const { return data.size(); }

  void fill(double v) { data.assign(rows * cols, v); }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool all_finite() const;

  // throws Error(Shape/Numeric) when the struct invariants do not hold
  void validate(const char* what) const;
};

bool operator==(const Matrix& a, const Matrix& b);

// C = alpha * op(A) * op(B) + beta * C, op controlled by trans flags.
// Shapes are checked; backed by BLAS dgemm.
void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b,
            Matrix& c, double alpha = 1.0, double beta = 0.0);

Matrix transposed(const Matrix& m);

}  // namespace spikemark
