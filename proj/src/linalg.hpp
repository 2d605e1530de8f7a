// SPDX-License-Identifier: Apache-2.0
#pragma once

// Internal dense-linear-algebra backend (Eigen). Kept out of the public
// headers so the library surface stays Eigen-free.

#include <span>
#include <vector>

#include "nlml/matrix.hpp"

namespace nlml::linalg {

/// Thin SVD: u gets min(m,n) left singular vectors as columns, sigma the
/// full non-increasing spectrum. Deterministic, single-threaded.
void thin_svd(const Matrix& a, Matrix& u, std::vector<double>& sigma);

/// Minimum-norm least-squares solution of min ||a x - b||_2. Singular values
/// below 1e-12 * sigma_max are treated as zero; rank_deficient reports
/// whether any were dropped.
std::vector<double> lstsq_min_norm(const Matrix& a, std::span<const double> b,
                                   bool& rank_deficient);

}  // namespace nlml::linalg
