// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test-side oracles, written straight from the definitions and kept
// independent of the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nlml/matrix.hpp"
#include "nlml/rng.hpp"
#include "nlml/tensor.hpp"

namespace nlml_test {

// Column index of the cyclic unfolding: modes walked in the order
// (mode+1, ..., N, 1, ..., mode-1), first listed slowest-varying.
inline std::size_t oracle_unfold_col(const std::vector<std::size_t>& dims,
                                     const std::vector<std::size_t>& idx, std::size_t mode) {
    const std::size_t n = dims.size();
    std::size_t col = 0;
    for (std::size_t off = 0; off + 1 < n; ++off) {
        const std::size_t m = (mode + off) % n;  // 0-based cyclic order after mode-1
        col = col * dims[m] + idx[m];
    }
    return col;
}

// Definitional element-by-element unfolding.
inline nlml::Matrix oracle_unfold(const nlml::Tensor& t, std::size_t mode) {
    const auto& dims = t.dims();
    const std::size_t n = dims.size();
    nlml::Matrix m(dims[mode - 1], t.size() / dims[mode - 1]);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        m(idx[mode - 1], oracle_unfold_col(dims, idx, mode)) = t.data()[flat];
        for (std::size_t d = 0; d < n; ++d) {
            if (++idx[d] < dims[d]) break;
            idx[d] = 0;
        }
    }
    return m;
}

// Definitional n-mode product: out[..., i, ...] = sum_j a(i,j) t[..., j, ...].
inline nlml::Tensor oracle_mode_product(const nlml::Tensor& t, const nlml::Matrix& a,
                                        std::size_t mode) {
    auto dims = t.dims();
    const std::size_t old_extent = dims[mode - 1];
    dims[mode - 1] = a.rows();
    nlml::Tensor out(dims);
    std::vector<std::size_t> idx(dims.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        double acc = 0.0;
        std::vector<std::size_t> src = idx;
        for (std::size_t j = 0; j < old_extent; ++j) {
            src[mode - 1] = j;
            acc += a(idx[mode - 1], j) * t.at(src);
        }
        out.data()[flat] = acc;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            if (++idx[d] < dims[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

inline nlml::Tensor random_tensor(const std::vector<std::size_t>& dims, nlml::Rng& rng) {
    nlml::Tensor t(dims);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
    return t;
}

inline nlml::Matrix random_matrix(std::size_t rows, std::size_t cols, nlml::Rng& rng) {
    nlml::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

inline double max_abs_diff(const nlml::Tensor& a, const nlml::Tensor& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a.data()[i] - b.data()[i]));
    return d;
}

inline double rel_frobenius_error(const nlml::Tensor& a, const nlml::Tensor& b) {
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        diff += d * d;
        norm += a.data()[i] * a.data()[i];
    }
    return norm > 0 ? std::sqrt(diff / norm) : std::sqrt(diff);
}

}  // namespace nlml_test
