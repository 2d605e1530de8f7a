// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the tensor algebra and the network
// code. Every operation has a scalar reference implementation and, on
// x86-64, an AVX2+FMA variant; the active backend is picked once at startup
// from CPUID (override with NLML_KERNELS=scalar|avx2). The two variants are
// equivalence-tested against each other, so everything above this layer can
// treat the dispatch as invisible.
//
// All matrices are dense row-major; `gemm_*` accumulate into c.

namespace nlml::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
const char* backend_name();
// Returns false (and leaves the backend unchanged) if the request cannot be
// honored on this CPU/build.
bool set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void scale(double alpha, double* x, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);

// c (m x n) += a (m x k) * b (k x n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c);
// c (m x n) += a (m x k) * b^T, b stored (n x k)
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c);
// c (m x n) += a^T * b, a stored (k x m), b stored (k x n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c);

void relu(const double* z, double* out, std::size_t n);
// dz = dy where z > 0, else 0
void relu_grad(const double* z, const double* dy, double* dz, std::size_t n);
// y = tanh(z); dz = dy * (1 - y^2). tanh itself stays scalar (libm) in both
// backends so results are identical across them.
void tanh_eval(const double* z, double* out, std::size_t n);
void tanh_grad(const double* y, const double* dy, double* dz, std::size_t n);

// One Adam update: m,v are the moment buffers, bc1/bc2 the bias corrections
// 1-beta1^t and 1-beta2^t for the current step t.
void adam_step(double* param, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2);

namespace detail {

bool avx2_available();  // compiled in and supported by this CPU

double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_squares_scalar(const double* a, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double alpha, double* x, std::size_t n);
void add_scalar(const double* a, const double* b, double* out, std::size_t n);
void sub_scalar(const double* a, const double* b, double* out, std::size_t n);
void gemm_nn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);
void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);
void gemm_tn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c);
void relu_scalar(const double* z, double* out, std::size_t n);
void relu_grad_scalar(const double* z, const double* dy, double* dz, std::size_t n);
void tanh_grad_scalar(const double* y, const double* dy, double* dz, std::size_t n);
void adam_step_scalar(double* param, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);

double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_squares_avx2(const double* a, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
void add_avx2(const double* a, const double* b, double* out, std::size_t n);
void sub_avx2(const double* a, const double* b, double* out, std::size_t n);
void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, const double* b, double* c);
void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, const double* b, double* c);
void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k,
                  const double* a, const double* b, double* c);
void relu_avx2(const double* z, double* out, std::size_t n);
void relu_grad_avx2(const double* z, const double* dy, double* dz, std::size_t n);
void tanh_grad_avx2(const double* y, const double* dy, double* dz, std::size_t n);
void adam_step_avx2(double* param, double* m, double* v, const double* g,
                    std::size_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2);

}  // namespace detail

}  // namespace nlml::kernels
