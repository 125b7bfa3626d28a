#pragma once

#include <vector>

namespace pricelab {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized for small systems (seller counts <= 16);
// everything is by value.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return d_[idx(i, j)]; }
  double operator()(int i, int j) const { return d_[idx(i, j)]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return d_.empty(); }

  bool operator==(const Matrix&) const = default;

 private:
  size_t idx(int i, int j) const { return static_cast<size_t>(i) * cols_ + j; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

// Max absolute row sum.
double inf_norm(const Matrix& m);
double inf_norm(const Vec& v);
double inf_dist(const Vec& a, const Vec& b);

Matrix add(const Matrix& a, const Matrix& b);

// Solves a*x = b by Gaussian elimination with partial pivoting.
// Throws SolverError on a (numerically) singular system.
Vec solve_dense(Matrix a, Vec b);

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Throws SolverError if the matrix is not positive definite.
Matrix cholesky(const Matrix& a);

}  // namespace pricelab
