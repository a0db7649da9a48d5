#include "dgu/matrix.hpp"

namespace dgu {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a,
                              const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix c(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.data() + i * m;
    const double* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c.at(i, j) = s;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a.data() + p * n;
    const double* bp = b.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      double* ci = c.data() + i * m;
      const double av = ap[i];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add", a, b);
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("sub", a, b);
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Matrix scale(const Matrix& a, double c) {
  Matrix r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= c;
  return r;
}

void add_in_place(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error("add_in_place", a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace dgu
