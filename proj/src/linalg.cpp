#include "pricelab/linalg.hpp"

#include <cmath>
#include <cstdlib>

#include "pricelab/errors.hpp"

namespace pricelab {

double inf_norm(const Matrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
    if (row > best) best = row;
  }
  return best;
}

double inf_norm(const Vec& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

double inf_dist(const Vec& a, const Vec& b) {
  double best = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

Vec solve_dense(Matrix a, Vec b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw SolverError("solve_dense: dimension mismatch");

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-14)
      throw SolverError("solve_dense: singular system");
    if (pivot != col) {
      for (int j = col; j < n; ++j) std::swap(a(pivot, j), a(col, j));
      std::swap(b[pivot], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

Matrix cholesky(const Matrix& a) {
  const int n = a.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw SolverError("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

}  // namespace pricelab
