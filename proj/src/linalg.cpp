#include "tna/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <utility>

namespace tna {

bool lu_factor(Mat& m, std::vector<int>& pivots, double tol) {
  const int n = m.rows;
  pivots.assign(static_cast<std::size_t>(n), 0);

  double max_abs = 0.0;
  for (double v : m.a) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) return false;
  const double threshold = tol * max_abs;

  for (int k = 0; k < n; ++k) {
    int pivot_row = k;
    double pivot_val = std::abs(m(k, k));
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(m(i, k)) > pivot_val) {
        pivot_val = std::abs(m(i, k));
        pivot_row = i;
      }
    }
    if (pivot_val <= threshold) return false;
    pivots[static_cast<std::size_t>(k)] = pivot_row;
    if (pivot_row != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(pivot_row, j));
    }
    const double inv_pivot = 1.0 / m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double factor = m(i, k) * inv_pivot;
      m(i, k) = factor;
      if (factor == 0.0) continue;
      for (int j = k + 1; j < n; ++j) m(i, j) -= factor * m(k, j);
    }
  }
  return true;
}

void lu_solve(const Mat& lu, const std::vector<int>& pivots, std::span<double> b) {
  const int n = lu.rows;
  // stored multipliers reflect final row positions, so the permutation must
  // be applied to b in full before forward substitution
  for (int k = 0; k < n; ++k) {
    const int p = pivots[static_cast<std::size_t>(k)];
    if (p != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
  }
  for (int k = 0; k < n; ++k)
    for (int i = k + 1; i < n; ++i)
      b[static_cast<std::size_t>(i)] -= lu(i, k) * b[static_cast<std::size_t>(k)];
  for (int i = n - 1; i >= 0; --i) {
    double sum = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) sum -= lu(i, j) * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = sum / lu(i, i);
  }
}

bool invert(Mat m, Mat& out, double tol) {
  const int n = m.rows;
  std::vector<int> pivots;
  if (!lu_factor(m, pivots, tol)) return false;
  out = Mat(n, n);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = (i == j) ? 1.0 : 0.0;
    lu_solve(m, pivots, col);
    for (int i = 0; i < n; ++i) out(i, j) = col[static_cast<std::size_t>(i)];
  }
  return true;
}

bool solve(const Mat& m, std::span<const double> b, std::span<double> x, double tol) {
  Mat lu = m;
  std::vector<int> pivots;
  if (!lu_factor(lu, pivots, tol)) return false;
  for (std::size_t i = 0; i < b.size(); ++i) x[i] = b[i];
  lu_solve(lu, pivots, x);
  return true;
}

}  // namespace tna
