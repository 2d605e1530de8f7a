// SPDX-License-Identifier: Apache-2.0

#include "nlml/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace nlml::kernels {

namespace detail {

bool avx2_available() {
#if defined(NLML_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

#ifndef NLML_HAVE_AVX2
// Stubs so the declarations always link; the dispatcher never selects them.
[[noreturn]] static void no_avx2() {
    throw std::runtime_error("AVX2 kernels not compiled into this build");
}
double dot_avx2(const double*, const double*, std::size_t) { no_avx2(); }
double sum_squares_avx2(const double*, std::size_t) { no_avx2(); }
void axpy_avx2(double, const double*, double*, std::size_t) { no_avx2(); }
void scale_avx2(double, double*, std::size_t) { no_avx2(); }
void add_avx2(const double*, const double*, double*, std::size_t) { no_avx2(); }
void sub_avx2(const double*, const double*, double*, std::size_t) { no_avx2(); }
void gemm_nn_avx2(std::size_t, std::size_t, std::size_t, const double*, const double*, double*) { no_avx2(); }
void gemm_nt_avx2(std::size_t, std::size_t, std::size_t, const double*, const double*, double*) { no_avx2(); }
void gemm_tn_avx2(std::size_t, std::size_t, std::size_t, const double*, const double*, double*) { no_avx2(); }
void relu_avx2(const double*, double*, std::size_t) { no_avx2(); }
void relu_grad_avx2(const double*, const double*, double*, std::size_t) { no_avx2(); }
void tanh_grad_avx2(const double*, const double*, double*, std::size_t) { no_avx2(); }
void adam_step_avx2(double*, double*, double*, const double*, std::size_t,
                    double, double, double, double, double, double) { no_avx2(); }
#endif

}  // namespace detail

namespace {

struct KernelTable {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
    void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
    void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_grad)(const double*, const double*, double*, std::size_t);
    void (*tanh_grad)(const double*, const double*, double*, std::size_t);
    void (*adam_step)(double*, double*, double*, const double*, std::size_t,
                      double, double, double, double, double, double);
};

constexpr KernelTable kScalarTable = {
    Backend::Scalar,
    detail::dot_scalar,
    detail::sum_squares_scalar,
    detail::axpy_scalar,
    detail::scale_scalar,
    detail::add_scalar,
    detail::sub_scalar,
    detail::gemm_nn_scalar,
    detail::gemm_nt_scalar,
    detail::gemm_tn_scalar,
    detail::relu_scalar,
    detail::relu_grad_scalar,
    detail::tanh_grad_scalar,
    detail::adam_step_scalar,
};

const KernelTable kAvx2Table = {
    Backend::Avx2,
    detail::dot_avx2,
    detail::sum_squares_avx2,
    detail::axpy_avx2,
    detail::scale_avx2,
    detail::add_avx2,
    detail::sub_avx2,
    detail::gemm_nn_avx2,
    detail::gemm_nt_avx2,
    detail::gemm_tn_avx2,
    detail::relu_avx2,
    detail::relu_grad_avx2,
    detail::tanh_grad_avx2,
    detail::adam_step_avx2,
};

const KernelTable* initial_table() {
    if (const char* env = std::getenv("NLML_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &kScalarTable;
        if (std::strcmp(env, "avx2") == 0 && detail::avx2_available()) return &kAvx2Table;
    }
    return detail::avx2_available() ? &kAvx2Table : &kScalarTable;
}

const KernelTable*& table() {
    static const KernelTable* t = initial_table();
    return t;
}

}  // namespace

Backend active_backend() { return table()->backend; }

const char* backend_name() {
    return table()->backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool set_backend(Backend b) {
    if (b == Backend::Avx2) {
        if (!detail::avx2_available()) return false;
        table() = &kAvx2Table;
        return true;
    }
    table() = &kScalarTable;
    return true;
}

double dot(const double* a, const double* b, std::size_t n) { return table()->dot(a, b, n); }
double sum_squares(const double* a, std::size_t n) { return table()->sum_squares(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table()->axpy(alpha, x, y, n); }
void scale(double alpha, double* x, std::size_t n) { table()->scale(alpha, x, n); }
void add(const double* a, const double* b, double* out, std::size_t n) { table()->add(a, b, out, n); }
void sub(const double* a, const double* b, double* out, std::size_t n) { table()->sub(a, b, out, n); }

void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c) {
    table()->gemm_nn(m, n, k, a, b, c);
}
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c) {
    table()->gemm_nt(m, n, k, a, b, c);
}
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c) {
    table()->gemm_tn(m, n, k, a, b, c);
}

void relu(const double* z, double* out, std::size_t n) { table()->relu(z, out, n); }
void relu_grad(const double* z, const double* dy, double* dz, std::size_t n) {
    table()->relu_grad(z, dy, dz, n);
}

void tanh_eval(const double* z, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(z[i]);
}

void tanh_grad(const double* y, const double* dy, double* dz, std::size_t n) {
    table()->tanh_grad(y, dy, dz, n);
}

void adam_step(double* param, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
    table()->adam_step(param, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace nlml::kernels
