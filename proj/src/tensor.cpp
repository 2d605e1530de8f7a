// SPDX-License-Identifier: Apache-2.0

#include "nlml/tensor.hpp"

#include <cmath>
#include <string>

#include "nlml/kernels.hpp"

namespace nlml {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw UsageError("Tensor: empty dims");
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw UsageError("Tensor: zero extent");
        n *= d;
    }
    return n;
}

void check_mode(std::size_t mode, std::size_t order) {
    if (mode < 1 || mode > order)
        throw UsageError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(order) + " tensor");
}

// Column strides of the cyclic unfolding; strides[mode-1] stays unset.
std::vector<std::size_t> unfold_col_strides(const std::vector<std::size_t>& dims,
                                            std::size_t mode) {
    const std::size_t n = dims.size();
    std::vector<std::size_t> order_cyclic;
    order_cyclic.reserve(n - 1);
    for (std::size_t m = mode; m < n; ++m) order_cyclic.push_back(m);      // n+1..N (0-based)
    for (std::size_t m = 0; m + 1 < mode; ++m) order_cyclic.push_back(m);  // 1..n-1
    std::vector<std::size_t> strides(n, 0);
    std::size_t s = 1;
    for (auto it = order_cyclic.rbegin(); it != order_cyclic.rend(); ++it) {
        strides[*it] = s;
        s *= dims[*it];
    }
    return strides;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    data_.assign(checked_product(dims_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_product(dims_) != data_.size())
        throw UsageError("Tensor: data length does not match dims product");
}

std::size_t Tensor::extent(std::size_t mode) const {
    check_mode(mode, order());
    return dims_[mode - 1];
}

std::size_t Tensor::flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != dims_.size()) throw UsageError("Tensor: index arity mismatch");
    std::size_t flat = 0;
    for (std::size_t m = dims_.size(); m-- > 0;) {
        if (idx[m] >= dims_[m]) throw UsageError("Tensor: index out of range");
        flat = flat * dims_[m] + idx[m];
    }
    return flat;
}

double Tensor::frobenius_norm() const {
    return std::sqrt(kernels::sum_squares(data_.data(), data_.size()));
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix unfold(const Tensor& t, std::size_t mode) {
    check_mode(mode, t.order());
    const auto& dims = t.dims();
    const std::size_t n = dims.size();
    const std::size_t rows = dims[mode - 1];
    const std::size_t cols = t.size() / rows;
    const auto strides = unfold_col_strides(dims, mode);

    Matrix m(rows, cols);
    std::vector<std::size_t> idx(n, 0);
    std::size_t col = 0;
    const double* src = t.data();
    double* dst = m.data();
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        dst[idx[mode - 1] * cols + col] = src[flat];
        // advance the multi-index, mode 1 fastest
        for (std::size_t d = 0; d < n; ++d) {
            if (d != mode - 1) col -= idx[d] * strides[d];
            if (++idx[d] < dims[d]) {
                if (d != mode - 1) col += idx[d] * strides[d];
                break;
            }
            idx[d] = 0;
        }
    }
    return m;
}

Tensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& dims) {
    check_mode(mode, dims.size());
    const std::size_t n = dims.size();
    const std::size_t total = checked_product(dims);
    if (m.rows() != dims[mode - 1] || m.cols() != total / dims[mode - 1])
        throw UsageError("fold: matrix shape inconsistent with dims");
    const auto strides = unfold_col_strides(dims, mode);

    Tensor t(dims);
    std::vector<std::size_t> idx(n, 0);
    std::size_t col = 0;
    const double* src = m.data();
    const std::size_t cols = m.cols();
    double* dst = t.data();
    for (std::size_t flat = 0; flat < total; ++flat) {
        dst[flat] = src[idx[mode - 1] * cols + col];
        for (std::size_t d = 0; d < n; ++d) {
            if (d != mode - 1) col -= idx[d] * strides[d];
            if (++idx[d] < dims[d]) {
                if (d != mode - 1) col += idx[d] * strides[d];
                break;
            }
            idx[d] = 0;
        }
    }
    return t;
}

Tensor mode_product(const Tensor& t, const Matrix& a, std::size_t mode) {
    check_mode(mode, t.order());
    if (a.cols() != t.dims()[mode - 1])
        throw UsageError("mode_product: matrix has " + std::to_string(a.cols()) +
                         " columns, tensor extent along mode " + std::to_string(mode) +
                         " is " + std::to_string(t.dims()[mode - 1]));
    Matrix unf = unfold(t, mode);
    Matrix out(a.rows(), unf.cols());
    kernels::gemm_nn(a.rows(), unf.cols(), a.cols(), a.data(), unf.data(), out.data());
    std::vector<std::size_t> new_dims = t.dims();
    new_dims[mode - 1] = a.rows();
    return fold(out, mode, new_dims);
}

Tensor contract_mode(const Tensor& t, std::span<const double> v, std::size_t mode) {
    check_mode(mode, t.order());
    const auto& dims = t.dims();
    if (t.order() < 2) throw UsageError("contract_mode: tensor must have order >= 2");
    if (v.size() != dims[mode - 1])
        throw UsageError("contract_mode: vector length mismatch");

    std::vector<std::size_t> out_dims;
    out_dims.reserve(dims.size() - 1);
    for (std::size_t d = 0; d < dims.size(); ++d)
        if (d != mode - 1) out_dims.push_back(dims[d]);

    // inner = product of dims before `mode`, outer = product after; the
    // mode-1-fastest layout makes the contraction a strided accumulation
    std::size_t inner = 1;
    for (std::size_t d = 0; d + 1 < mode; ++d) inner *= dims[d];
    const std::size_t k = dims[mode - 1];
    const std::size_t outer = t.size() / (inner * k);

    Tensor out(out_dims);
    const double* src = t.data();
    double* dst = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * inner * k;
        double* obl = dst + o * inner;
        for (std::size_t j = 0; j < k; ++j) {
            kernels::axpy(v[j], block + j * inner, obl, inner);
        }
    }
    return out;
}

}  // namespace nlml
