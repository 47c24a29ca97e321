#pragma once

// Independent reference implementations used only by tests. None of these
// share code paths with the library.

#include <cmath>
#include <numbers>
#include <vector>

namespace psodr::testing {

/// Direct O(n^2) DFT magnitude of bins [0, n/2).
inline std::vector<double> direct_dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2);
  for (std::size_t m = 0; m < n / 2; ++m) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce m*t mod n first so the angle stays small and exact.
      const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((m * t) % n) /
                                static_cast<long double>(n);
      re += x[t] * std::cos(angle);
      im += x[t] * std::sin(angle);
    }
    out[m] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  return out;
}

/// Least squares by Gaussian elimination with partial pivoting on the normal
/// equations H^T H beta = H^T t. Dense row-major H [m x h].
inline std::vector<double> normal_equations_solve(const std::vector<std::vector<double>>& H, const std::vector<double>& t) {
  const std::size_t m = H.size(), h = H.front().size();
  std::vector<std::vector<long double>> A(h, std::vector<long double>(h + 1, 0.0L));
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j)
      for (std::size_t r = 0; r < m; ++r) A[i][j] += static_cast<long double>(H[r][i]) * H[r][j];
    for (std::size_t r = 0; r < m; ++r) A[i][h] += static_cast<long double>(H[r][i]) * t[r];
  }
  for (std::size_t col = 0; col < h; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < h; ++r)
      if (std::fabs(A[r][col]) > std::fabs(A[pivot][col])) pivot = r;
    std::swap(A[col], A[pivot]);
    for (std::size_t r = 0; r < h; ++r) {
      if (r == col) continue;
      const long double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= h; ++c) A[r][c] -= f * A[col][c];
    }
  }
  std::vector<double> beta(h);
  for (std::size_t i = 0; i < h; ++i) beta[i] = static_cast<double>(A[i][h] / A[i][i]);
  return beta;
}

/// Sample standard error by the two-pass textbook formula in long double.
inline double brute_force_se(const std::vector<double>& v) {
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= static_cast<long double>(v.size());
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  return static_cast<double>(std::sqrt(ss / static_cast<long double>(v.size() - 1)) /
                             std::sqrt(static_cast<long double>(v.size())));
}

}  // namespace psodr::testing
