#pragma once

#include <cstddef>

// Dense numeric kernels behind the tensor ops. Each kernel exists twice:
// a serial reference in kernels::serial and an OpenMP version in
// kernels::parallel that distributes independent output elements over
// threads. Every output element is computed by the same serial expression
// in both variants, so results are bitwise identical regardless of mode or
// thread count. The top-level entry points dispatch on the active mode and
// a work-size threshold.
namespace relex::kernels {

enum class Mode { Serial, Parallel };

void set_mode(Mode m);
Mode mode();
int thread_count();

// Outputs smaller than this stay on the serial path even in Parallel mode.
inline constexpr std::size_t kParallelThreshold = 4096;

namespace serial {

// c[m x n] (+)= op(a) * op(b), row major.
// trans_a: a is stored [k x m] and read transposed; trans_b likewise [n x k].
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate);

// in [n x d_in], kernel [k x d_in x d_out], bias [d_out] (may be null),
// out [n x d_out]; symmetric zero padding of (k-1)/2 keeps the length.
void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k);

// Accumulating backward passes (gather formulation, one writer per element).
void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k);
void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k);
void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim);

void tanh_map(const double* in, double* out, std::size_t n);

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a, bool trans_b, bool accumulate);
void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k);
void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k);
void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k);
void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim);
void tanh_map(const double* in, double* out, std::size_t n);

}  // namespace parallel

// Dispatching entry points.
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n, bool trans_a = false, bool trans_b = false, bool accumulate = false);
void conv1d_forward(const double* in, const double* kernel, const double* bias, double* out,
                    std::size_t n, std::size_t d_in, std::size_t d_out, std::size_t k);
void conv1d_backward_input(const double* d_out, const double* kernel, double* d_in,
                           std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                           std::size_t k);
void conv1d_backward_kernel(const double* d_out, const double* in, double* d_kernel,
                            std::size_t n, std::size_t d_in_dim, std::size_t d_out_dim,
                            std::size_t k);
void conv1d_backward_bias(const double* d_out, double* d_bias, std::size_t n,
                          std::size_t d_out_dim);
void tanh_map(const double* in, double* out, std::size_t n);

}  // namespace relex::kernels
