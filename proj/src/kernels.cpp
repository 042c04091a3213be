#include "relex/kernels.hpp"

#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace relex::kernels {

namespace {

std::atomic<Mode> g_mode{Mode::Parallel};

// Per-output-element computations shared by the serial and parallel variants,
// so both produce bitwise-identical results element for element.

inline double matmul_cell(const double* a, const double* b, std::size_t i, std::size_t j,
                          std::size_t m, std::size_t k, std::size_t n, bool trans_a,
                          bool trans_b) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = trans_a ? a[p * m + i] : a[i * k + p];
    const double bv = trans_b ? b[j * k + p] : b[p * n + j];
    acc += av * bv;
  }
  return acc;
}

inline double conv_cell(const double* in, const double* kernel, const double* bias,
                        std::size_t p, std::size_t co, std::size_t n, std::size_t d_in,
                        std::size_t d_out, std::size_t k) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  double acc = bias ? bias[co] : 0.0;
  for (std::size_t w = 0; w < k; ++w) {
    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + w) - pad;
    if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
    const double* row = &in[static_cast<std::size_t>(src) * d_in];
    const double* kw = &kernel[(w * d_in) * d_out + co];
    for (std::size_t ci = 0; ci < d_in; ++ci) {
      acc += row[ci] * kw[ci * d_out];
    }
  }
  return acc;
}

inline double conv_dinput_cell(const double* d_out, const double* kernel, std::size_t s,
                               std::size_t ci, std::size_t n, std::size_t d_in_dim,
                               std::size_t d_out_dim, std::size_t k) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  double acc = 0.0;
  // input position s feeds output position p = s + pad - w
  for (std::size_t w = 0; w < k; ++w) {
    const std::ptrdiff_t p =
        static_cast<std::ptrdiff_t>(s) + pad - static_cast<std::ptrdiff_t>(w);
    if (p < 0 || p >= static_cast<std::ptrdiff_t>(n)) continue;
    const double* go = &d_out[static_cast<std::size_t>(p) * d_out_dim];
    const double* kw = &kernel[(w * d_in_dim + ci) * d_out_dim];
    for (std::size_t co = 0; co < d_out_dim; ++co) {
      acc += go[co] * kw[co];
    }
  }
  return acc;
}

inline double conv_dkernel_cell(const double* d_out, const double* in, std::size_t w,
                                std::size_t ci, std::size_t co, std::size_t n,
                                std::size_t d_in_dim, std::size_t d_out_dim, std::size_t k) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + w) - pad;
    if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
    acc += d_out[p * d_out_dim + co] * in[static_cast<std::size_t>(src) * d_in_dim + ci];
  }
  return acc;
}

inline double conv_dbias_cell(const double* d_out, std::size_t co, std::size_t n,
                              std::size_t d_out_dim) {
  double acc = 0.0;
  for (std::size_t p = 0; p < n; ++p) acc += d_out[p * d_out_dim + co];
  return acc;
}

}  // namespace

void set_mode(Mode m) { g_mode.store(m); }
Mode mode() { return g_mode.load(); }

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double acc = matmul_cell(a, b, i, j, m, k, n, trans_a, trans_b);
      double* out = &c[i * n + j];
      *out = accumulate ? *out + acc : acc;
    }
  }
}

void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k) {
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t co = 0; co < d_out; ++co) {
      out[p * d_out + co] = conv_cell(in, kernel, bias, p, co, n, d_in, d_out, k);
    }
  }
}

void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k) {
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ci = 0; ci < d_in_dim; ++ci) {
      d_in[s * d_in_dim + ci] += conv_dinput_cell(d_out, kernel, s, ci, n, d_in_dim,
                                                  d_out_dim, k);
    }
  }
}

void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k) {
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t ci = 0; ci < d_in_dim; ++ci) {
      for (std::size_t co = 0; co < d_out_dim; ++co) {
        d_kernel[(w * d_in_dim + ci) * d_out_dim + co] +=
            conv_dkernel_cell(d_out, in, w, ci, co, n, d_in_dim, d_out_dim, k);
      }
    }
  }
}

void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim) {
  for (std::size_t co = 0; co < d_out_dim; ++co) {
    d_bias[co] += conv_dbias_cell(d_out, co, n, d_out_dim);
  }
}

void tanh_map(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
}

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      const double acc = matmul_cell(a, b, i, j, m, k, n, trans_a, trans_b);
      double* out = &c[i * n + j];
      *out = accumulate ? *out + acc : acc;
    }
  }
}

void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < static_cast<std::ptrdiff_t>(n); ++pp) {
    const std::size_t p = static_cast<std::size_t>(pp);
    for (std::size_t co = 0; co < d_out; ++co) {
      out[p * d_out + co] = conv_cell(in, kernel, bias, p, co, n, d_in, d_out, k);
    }
  }
}

void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ss = 0; ss < static_cast<std::ptrdiff_t>(n); ++ss) {
    const std::size_t s = static_cast<std::size_t>(ss);
    for (std::size_t ci = 0; ci < d_in_dim; ++ci) {
      d_in[s * d_in_dim + ci] += conv_dinput_cell(d_out, kernel, s, ci, n, d_in_dim,
                                                  d_out_dim, k);
    }
  }
}

void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k) {
  const std::size_t cells = k * d_in_dim * d_out_dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ff = 0; ff < static_cast<std::ptrdiff_t>(cells); ++ff) {
    const std::size_t f = static_cast<std::size_t>(ff);
    const std::size_t w = f / (d_in_dim * d_out_dim);
    const std::size_t ci = (f / d_out_dim) % d_in_dim;
    const std::size_t co = f % d_out_dim;
    d_kernel[f] += conv_dkernel_cell(d_out, in, w, ci, co, n, d_in_dim, d_out_dim, k);
  }
}

void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(d_out_dim); ++cc) {
    const std::size_t co = static_cast<std::size_t>(cc);
    d_bias[co] += conv_dbias_cell(d_out, co, n, d_out_dim);
  }
}

void tanh_map(const double* in, double* out, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[i] = std::tanh(in[i]);
  }
}

}  // namespace parallel

namespace {
inline bool go_parallel(std::size_t out_elems) {
  return mode() == Mode::Parallel && out_elems >= kParallelThreshold && thread_count() > 1;
}
}  // namespace

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate) {
  if (go_parallel(m * n)) {
    parallel::matmul(a, b, c, m, k, n, trans_a, trans_b, accumulate);
  } else {
    serial::matmul(a, b, c, m, k, n, trans_a, trans_b, accumulate);
  }
}

void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k) {
  if (go_parallel(n * d_out)) {
    parallel::conv1d_forward(in, kernel, bias, out, n, d_in, d_out, k);
  } else {
    serial::conv1d_forward(in, kernel, bias, out, n, d_in, d_out, k);
  }
}

void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k) {
  if (go_parallel(n * d_in_dim)) {
    parallel::conv1d_backward_input(d_out, kernel, d_in, n, d_in_dim, d_out_dim, k);
  } else {
    serial::conv1d_backward_input(d_out, kernel, d_in, n, d_in_dim, d_out_dim, k);
  }
}

void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k) {
  if (go_parallel(k * d_in_dim * d_out_dim)) {
    parallel::conv1d_backward_kernel(d_out, in, d_kernel, n, d_in_dim, d_out_dim, k);
  } else {
    serial::conv1d_backward_kernel(d_out, in, d_kernel, n, d_in_dim, d_out_dim, k);
  }
}

void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim) {
  if (go_parallel(d_out_dim)) {
    parallel::conv1d_backward_bias(d_out, d_bias, n, d_out_dim);
  } else {
    serial::conv1d_backward_bias(d_out, d_bias, n, d_out_dim);
  }
}

void tanh_map(const double* in, double* out, std::size_t n) {
  if (go_parallel(n)) {
    parallel::tanh_map(in, out, n);
  } else {
    serial::tanh_map(in, out, n);
  }
}

}  // namespace relex::kernels
