// SPDX-License-Identifier: Apache-2.0
//
// Scalar/AVX2 equivalence: every dispatched kernel must agree with the
// scalar reference within FMA-level rounding on awkward sizes.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "nlml/kernels.hpp"
#include "nlml/rng.hpp"

using namespace nlml;
namespace kd = nlml::kernels::detail;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

bool close(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 67, 129};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("dispatch reports a backend") {
    CHECK((kernels::active_backend() == kernels::Backend::Scalar ||
           kernels::active_backend() == kernels::Backend::Avx2));
    CHECK(kernels::set_backend(kernels::Backend::Scalar));
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    if (kd::avx2_available()) {
        CHECK(kernels::set_backend(kernels::Backend::Avx2));
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    } else {
        CHECK_FALSE(kernels::set_backend(kernels::Backend::Avx2));
    }
}

TEST_CASE("scalar/avx2 elementwise equivalence") {
    if (!kd::avx2_available()) return;
    Rng rng(101);
    for (std::size_t n : kSizes) {
        auto a = random_vec(n, rng);
        auto b = random_vec(n, rng);

        CHECK(close(kd::dot_scalar(a.data(), b.data(), n), kd::dot_avx2(a.data(), b.data(), n),
                    1e-13));
        CHECK(close(kd::sum_squares_scalar(a.data(), n), kd::sum_squares_avx2(a.data(), n),
                    1e-13));

        auto y1 = b, y2 = b;
        kd::axpy_scalar(1.7, a.data(), y1.data(), n);
        kd::axpy_avx2(1.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-14));

        auto s1 = a, s2 = a;
        kd::scale_scalar(-0.37, s1.data(), n);
        kd::scale_avx2(-0.37, s2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == s2[i]);

        std::vector<double> o1(n), o2(n);
        kd::add_scalar(a.data(), b.data(), o1.data(), n);
        kd::add_avx2(a.data(), b.data(), o2.data(), n);
        CHECK(o1 == o2);
        kd::sub_scalar(a.data(), b.data(), o1.data(), n);
        kd::sub_avx2(a.data(), b.data(), o2.data(), n);
        CHECK(o1 == o2);

        kd::relu_scalar(a.data(), o1.data(), n);
        kd::relu_avx2(a.data(), o2.data(), n);
        CHECK(o1 == o2);
        kd::relu_grad_scalar(a.data(), b.data(), o1.data(), n);
        kd::relu_grad_avx2(a.data(), b.data(), o2.data(), n);
        CHECK(o1 == o2);

        // tanh_grad takes y = tanh(z) in [-1, 1]
        auto ty = a;
        for (auto& v : ty) v = std::tanh(v);
        kd::tanh_grad_scalar(ty.data(), b.data(), o1.data(), n);
        kd::tanh_grad_avx2(ty.data(), b.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i], 1e-15));
    }
}

TEST_CASE("scalar/avx2 gemm equivalence") {
    if (!kd::avx2_available()) return;
    Rng rng(202);
    const std::size_t shapes[][3] = {{1, 1, 1}, {2, 3, 4},  {5, 7, 3},  {8, 8, 8},
                                     {13, 9, 5}, {4, 17, 6}, {63, 5, 9}, {9, 64, 33}};
    for (const auto& s : shapes) {
        const std::size_t m = s[0], n = s[1], k = s[2];
        auto a = random_vec(m * k, rng);
        auto b = random_vec(k * n, rng);
        auto at = random_vec(k * m, rng);
        auto bt = random_vec(n * k, rng);

        std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
        kd::gemm_nn_scalar(m, n, k, a.data(), b.data(), c1.data());
        kd::gemm_nn_avx2(m, n, k, a.data(), b.data(), c2.data());
        for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c1[i], c2[i], 1e-13));

        std::fill(c1.begin(), c1.end(), -0.25);
        std::fill(c2.begin(), c2.end(), -0.25);
        kd::gemm_nt_scalar(m, n, k, a.data(), bt.data(), c1.data());
        kd::gemm_nt_avx2(m, n, k, a.data(), bt.data(), c2.data());
        for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c1[i], c2[i], 1e-13));

        std::fill(c1.begin(), c1.end(), 0.0);
        std::fill(c2.begin(), c2.end(), 0.0);
        kd::gemm_tn_scalar(m, n, k, at.data(), b.data(), c1.data());
        kd::gemm_tn_avx2(m, n, k, at.data(), b.data(), c2.data());
        for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c1[i], c2[i], 1e-13));
    }
}

TEST_CASE("scalar/avx2 adam equivalence") {
    if (!kd::avx2_available()) return;
    Rng rng(303);
    for (std::size_t n : kSizes) {
        auto p1 = random_vec(n, rng);
        auto p2 = p1;
        auto m1 = random_vec(n, rng);
        auto m2 = m1;
        std::vector<double> v1(n, 0.01), v2(n, 0.01);
        auto g = random_vec(n, rng);
        kd::adam_step_scalar(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3, 0.9, 0.999,
                             1e-8, 0.1, 0.001);
        kd::adam_step_avx2(p2.data(), m2.data(), v2.data(), g.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                           0.1, 0.001);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(close(p1[i], p2[i], 1e-14));
            CHECK(close(m1[i], m2[i], 1e-14));
            CHECK(close(v1[i], v2[i], 1e-14));
        }
    }
}

TEST_CASE("gemm_nn matches a plain triple loop") {
    Rng rng(404);
    const std::size_t m = 7, n = 11, k = 5;
    auto a = random_vec(m * k, rng);
    auto b = random_vec(k * n, rng);
    std::vector<double> c(m * n, 0.0), ref(m * n, 0.0);
    kernels::gemm_nn(m, n, k, a.data(), b.data(), c.data());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < k; ++l) ref[i * n + j] += a[i * k + l] * b[l * n + j];
    for (std::size_t i = 0; i < m * n; ++i) CHECK(close(c[i], ref[i], 1e-13));
}

}  // TEST_SUITE
