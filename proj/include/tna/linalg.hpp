#pragma once

#include <span>
#include <vector>

namespace tna {

/// Dense row-major matrix. Sizes here are small (state-space or coefficient
/// dimension), so no effort is spent on blocking or vectorization.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

/// In-place LU factorization with partial pivoting. Returns false when a
/// pivot falls below `tol` relative to the largest entry of the input.
bool lu_factor(Mat& m, std::vector<int>& pivots, double tol = 1e-12);

/// Solves LU x = b (b overwritten) for a factorization from lu_factor.
void lu_solve(const Mat& lu, const std::vector<int>& pivots, std::span<double> b);

/// out = m^-1. Returns false when m is singular within tolerance.
bool invert(Mat m, Mat& out, double tol = 1e-12);

/// Solves m x = b without disturbing m. Returns false when singular.
bool solve(const Mat& m, std::span<const double> b, std::span<double> x,
           double tol = 1e-12);

}  // namespace tna
