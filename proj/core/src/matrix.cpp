#include "spikemark/matrix.hpp"

#include <cblas.h>
#include <cmath>
#include <string>

#include "spikemark/errors.hpp"

namespace spikemark {

bool Matrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Matrix::validate(const char* what) const {
  require(data.size() == rows * cols, ErrorKind::Shape,
          std::string(what) + ": data length != rows*cols");
  require(all_finite(), ErrorKind::Numeric,
          std::string(what) + ": non-finite entries");
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

void matmul(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b,
            Matrix& c, double alpha, double beta) {
  const size_t m = trans_a ? a.cols : a.rows;
  const size_t k = trans_a ? a.rows : a.cols;
  const size_t kb = trans_b ? b.cols : b.rows;
  const size_t n = trans_b ? b.rows : b.cols;
  require(k == kb, ErrorKind::Shape, "matmul: inner dimensions disagree");
  require(c.rows == m && c.cols == n, ErrorKind::Shape,
          "matmul: output shape mismatch");
  if (m == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a.data.data(),
              static_cast<int>(a.cols), b.data.data(),
              static_cast<int>(b.cols), beta, c.data.data(),
              static_cast<int>(c.cols));
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (size_t r = 0; r < m.rows; ++r)
    for (size_t c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
  return t;
}

}  // namespace spikemark
