// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nlml/matrix.hpp"
#include "nlml/tensor.hpp"

namespace nlml {

/// Singular spectrum of one mode unfolding, non-increasing.
struct ModeSpectrum {
    std::size_t mode = 0;  // 1-based
    std::vector<double> singular_values;
};

/// Tucker factorization of the order-5 pose tensor
/// T ~ core x1 A(id) x2 A(y) x3 A(p) x4 A(r) x5 A(f), plus the auxiliary
/// tensor w = core x5 A(f) that maps latent coefficients straight to
/// feature space.
struct FactorSet {
    Tensor core;                       // (J_id, J_y, J_p, J_r, J_f)
    std::array<Matrix, 5> factors;     // per-mode orthonormal columns
    std::array<ModeSpectrum, 5> spectra;
    Tensor w;                          // (J_id, J_y, J_p, J_r, D_f)
};

/// Rank specification; kFullRank keeps all components of a mode.
inline constexpr std::size_t kFullRank = 0;

/// Higher-order SVD with per-mode truncation: each factor holds the leading
/// left singular vectors of that mode's unfolding, sign-canonicalized so the
/// largest-magnitude entry of every column is positive.
FactorSet hosvd(const Tensor& t, const std::array<std::size_t, 5>& ranks);

/// core x1 A(id) x2 A(y) x3 A(p) x4 A(r) x5 A(f).
Tensor reconstruct(const FactorSet& f);

/// Contracts w against one row from each of the four non-feature factors,
/// yielding the reconstructed feature vector.
std::vector<double> reconstruct_sample(const Tensor& w,
                                       std::span<const double> a_id,
                                       std::span<const double> a_y,
                                       std::span<const double> a_p,
                                       std::span<const double> a_r);

/// Fraction of squared spectral energy captured by the leading k values.
double energy_ratio(const ModeSpectrum& s, std::size_t k);

/// Flips column signs in place so each column's largest-magnitude entry is
/// positive (ties resolved by the first occurrence).
void canonicalize_columns(Matrix& m);

}  // namespace nlml
