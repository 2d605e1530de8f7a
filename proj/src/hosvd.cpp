// SPDX-License-Identifier: Apache-2.0

#include "nlml/hosvd.hpp"

#include <cmath>
#include <string>

#include "linalg.hpp"
#include "nlml/errors.hpp"

namespace nlml {

void canonicalize_columns(Matrix& m) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double mag = std::fabs(m(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (m(arg, c) < 0.0) {
            for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = -m(r, c);
        }
    }
}

FactorSet hosvd(const Tensor& t, const std::array<std::size_t, 5>& ranks) {
    if (t.order() != 5) throw UsageError("hosvd: expected an order-5 tensor");
    if (!t.all_finite()) throw NumericError("hosvd: tensor contains non-finite entries");

    FactorSet f;
    for (std::size_t mode = 1; mode <= 5; ++mode) {
        const std::size_t extent = t.dims()[mode - 1];
        std::size_t rank = ranks[mode - 1];
        if (rank == kFullRank) rank = extent;
        if (rank > extent)
            throw UsageError("hosvd: rank " + std::to_string(rank) + " exceeds extent " +
                             std::to_string(extent) + " of mode " + std::to_string(mode));

        Matrix u;
        std::vector<double> sigma;
        linalg::thin_svd(unfold(t, mode), u, sigma);

        Matrix factor(u.rows(), rank);
        for (std::size_t r = 0; r < u.rows(); ++r)
            for (std::size_t c = 0; c < rank; ++c) factor(r, c) = u(r, c);
        canonicalize_columns(factor);

        f.factors[mode - 1] = std::move(factor);
        f.spectra[mode - 1] = ModeSpectrum{mode, std::move(sigma)};
    }

    // core = T x1 A1^T ... x5 A5^T
    Tensor core = t;
    for (std::size_t mode = 1; mode <= 5; ++mode) {
        core = mode_product(core, f.factors[mode - 1].transposed(), mode);
    }
    f.w = mode_product(core, f.factors[4], 5);
    f.core = std::move(core);
    return f;
}

Tensor reconstruct(const FactorSet& f) {
    if (f.core.order() != 5) throw UsageError("reconstruct: core must be order 5");
    Tensor t = f.core;
    for (std::size_t mode = 1; mode <= 5; ++mode) {
        if (f.factors[mode - 1].cols() != t.dims()[mode - 1])
            throw UsageError("reconstruct: factor/core shape mismatch at mode " +
                             std::to_string(mode));
        t = mode_product(t, f.factors[mode - 1], mode);
    }
    return t;
}

std::vector<double> reconstruct_sample(const Tensor& w,
                                       std::span<const double> a_id,
                                       std::span<const double> a_y,
                                       std::span<const double> a_p,
                                       std::span<const double> a_r) {
    if (w.order() != 5) throw UsageError("reconstruct_sample: w must be order 5");
    // contract back-to-front so mode numbers stay valid
    Tensor x = contract_mode(w, a_r, 4);
    x = contract_mode(x, a_p, 3);
    x = contract_mode(x, a_y, 2);
    x = contract_mode(x, a_id, 1);
    return x.values();
}

double energy_ratio(const ModeSpectrum& s, std::size_t k) {
    if (s.singular_values.empty()) throw UsageError("energy_ratio: empty spectrum");
    if (k > s.singular_values.size())
        throw UsageError("energy_ratio: k exceeds spectrum length");
    double total = 0.0;
    double head = 0.0;
    for (std::size_t i = 0; i < s.singular_values.size(); ++i) {
        const double e = s.singular_values[i] * s.singular_values[i];
        total += e;
        if (i < k) head += e;
    }
    return total > 0.0 ? head / total : 0.0;
}

}  // namespace nlml
