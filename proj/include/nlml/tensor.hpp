// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlml/matrix.hpp"

namespace nlml {

/// Dense N-way tensor (order 1..5 in practice; the pose tensor is order 5
/// with modes (identity, yaw, pitch, roll, feature)).
///
/// Memory layout is frozen: mode 1 varies fastest. For dims (I1,...,IN),
///
///   flat(i1,...,iN) = i1 + I1*(i2 + I2*(i3 + ... + I_{N-1}*iN)...)
///
/// all indices 0-based. Mode arguments in the public API are 1-based to
/// match the usual tensor-algebra notation.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::vector<std::size_t> dims, std::vector<double> data);

    std::size_t order() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    /// Extent along a 1-based mode.
    std::size_t extent(std::size_t mode) const;
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    std::size_t flat_index(std::span<const std::size_t> idx) const;
    double at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }
    double& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }

    double frobenius_norm() const;
    /// True when every entry is finite.
    bool all_finite() const;

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

/// Mode-n unfolding to an (I_n x prod_{m!=n} I_m) matrix, cyclic column
/// convention: element (i1,...,iN) lands at row i_n and column
///
///   col = i_{n+1}*S_{n+1} + ... + i_N*S_N + i_1*S_1 + ... + i_{n-1}*S_{n-1}
///
/// where the modes are walked in the cyclic order (n+1, ..., N, 1, ..., n-1),
/// the stride of the LAST mode in that order is 1 and each earlier stride is
/// the product of the extents that follow it. So for a third-order tensor the
/// unfoldings are (I1 x I2*I3), (I2 x I3*I1), (I3 x I1*I2) with i_{n-1}
/// fastest-varying along columns.
Matrix unfold(const Tensor& t, std::size_t mode);

/// Inverse of unfold for the given dims; unfold(fold(m, n, dims), n) == m.
Tensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& dims);

/// n-mode product: contracts a's columns against t's mode-n fibers, so the
/// result has extent a.rows() along that mode:
///   (t x_n a)[..., i, ...] = sum_j a(i, j) * t[..., j, ...]
Tensor mode_product(const Tensor& t, const Matrix& a, std::size_t mode);

/// Contracts mode n against a vector and drops the mode (order decreases
/// by one). Equivalent to mode_product with a 1-row matrix plus a squeeze.
Tensor contract_mode(const Tensor& t, std::span<const double> v, std::size_t mode);

}  // namespace nlml
