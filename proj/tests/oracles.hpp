#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// Each is written directly from the defining formula, without touching the
// library's kernels or graph machinery, so a bug there cannot hide here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  const size_t m = a.size(), k = b.size(), n = b[0].size();
  Matrix c(m, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j)
      for (size_t p = 0; p < k; ++p) c[i][j] += a[i][p] * b[p][j];
  (void)k;
  return c;
}

// Sliding window convolution with symmetric zero padding, output length
// equals input length. kernel[w][ci][co], window size k odd.
inline Matrix conv1d(const Matrix& in, const std::vector<Matrix>& kernel,
                     const std::vector<double>& bias) {
  const size_t n = in.size(), d_in = in[0].size();
  const size_t k = kernel.size(), d_out = kernel[0][0].size();
  const long pad = static_cast<long>((k - 1) / 2);
  Matrix out(n, std::vector<double>(d_out, 0.0));
  for (size_t p = 0; p < n; ++p) {
    for (size_t co = 0; co < d_out; ++co) {
      double acc = bias[co];
      for (size_t w = 0; w < k; ++w) {
        const long src = static_cast<long>(p) + static_cast<long>(w) - pad;
        if (src < 0 || src >= static_cast<long>(n)) continue;
        for (size_t ci = 0; ci < d_in; ++ci) {
          acc += in[static_cast<size_t>(src)][ci] * kernel[w][ci][co];
        }
      }
      out[p][co] = acc;
    }
  }
  (void)d_in;
  return out;
}

// Columnwise maxima over the three segments [0..a], [a+1..b], [b+1..n-1];
// an empty segment contributes zeros.
inline std::vector<double> piecewise_max(const Matrix& h, size_t a, size_t b) {
  const size_t n = h.size(), m = h[0].size();
  std::vector<double> out(3 * m, 0.0);
  const size_t lo[3] = {0, a + 1, b + 1};
  const size_t hi[3] = {a + 1, b + 1, n};
  for (int s = 0; s < 3; ++s) {
    if (lo[s] >= hi[s]) continue;
    for (size_t j = 0; j < m; ++j) {
      double best = h[lo[s]][j];
      for (size_t i = lo[s] + 1; i < hi[s]; ++i) best = std::max(best, h[i][j]);
      out[static_cast<size_t>(s) * m + j] = best;
    }
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> e(x.size());
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(x[i] - mx);
    z += e[i];
  }
  for (double& v : e) v /= z;
  return e;
}

}  // namespace oracle
