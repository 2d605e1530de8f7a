// SPDX-License-Identifier: Apache-2.0

#include "nlml/estimator.hpp"

#include <chrono>
#include <cmath>

#include "linalg.hpp"
#include "nlml/errors.hpp"
#include "nlml/kernels.hpp"

namespace nlml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> eval_axis(const AxisCurves& curves, double angle) {
    std::vector<double> v(curves.dims.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = eval_curve(curves.dims[j].params, angle);
    return v;
}

}  // namespace

PoseEstimate predict_fast(const ModelBundle& bundle, std::span<const double> landmarks) {
    const auto t0 = Clock::now();
    if (landmarks.size() != bundle.encoder.input_dim())
        throw UsageError("predict_fast: feature length does not match encoder input");
    for (double v : landmarks)
        if (!std::isfinite(v)) throw NumericError("predict_fast: non-finite landmark");

    PoseEstimate est;
    est.latents = forward(bundle.encoder, landmarks);
    if (est.latents.size() != 9) throw UsageError("predict_fast: encoder must emit 9 latents");

    for (int a = 0; a < 3; ++a) {
        const std::span<const double> group(est.latents.data() + 3 * a, 3);
        const auto axis = static_cast<Axis>(a);
        est.unclamped[a] = forward(bundle.head(axis), group)[0];
    }

    double angles[3];
    for (int a = 0; a < 3; ++a) {
        const auto [lo, hi] = bundle.ranges[a];
        angles[a] = est.unclamped[a];
        if (angles[a] < lo) {
            angles[a] = lo;
            est.clamped = true;
        } else if (angles[a] > hi) {
            angles[a] = hi;
            est.clamped = true;
        }
    }
    est.pose = {angles[0], angles[1], angles[2]};
    est.elapsed_seconds = seconds_since(t0);
    return est;
}

std::vector<double> solve_identity(const Tensor& w, std::span<const double> a_y,
                                   std::span<const double> a_p, std::span<const double> a_r,
                                   std::span<const double> x, bool& rank_deficient) {
    if (w.order() != 5) throw UsageError("solve_identity: w must be order 5");
    const std::size_t j_id = w.dims()[0];
    const std::size_t df = w.dims()[4];
    if (x.size() != df) throw UsageError("solve_identity: feature length mismatch");

    // design matrix (df x j_id): column a is w contracted with the fixed
    // angle vectors for identity dimension a
    Tensor m = contract_mode(w, a_r, 4);  // (j_id, j_y, j_p, df)
    m = contract_mode(m, a_p, 3);         // (j_id, j_y, df)
    m = contract_mode(m, a_y, 2);         // (j_id, df)

    Matrix design(df, j_id);
    for (std::size_t a = 0; a < j_id; ++a)
        for (std::size_t fidx = 0; fidx < df; ++fidx)
            design(fidx, a) = m.data()[a + j_id * fidx];

    return linalg::lstsq_min_norm(design, x, rank_deficient);
}

namespace {

// Residual of x against the sample reconstructed from (a_id, per-axis
// coefficient vectors), given w pre-contracted with a_id.
struct AxisScanContext {
    // p (extent of the scanned axis' coefficient count x df): residual(w) =
    // || x - f_axis(w)^T p + fixed ||, built by contracting everything else
    Matrix p;
    std::vector<double> x;
};

double scan_residual(const AxisScanContext& ctx, const AxisCurves& curves, double angle) {
    const std::size_t k = ctx.p.rows();
    const std::size_t df = ctx.p.cols();
    std::vector<double> recon(df, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        kernels::axpy(eval_curve(curves.dims[j].params, angle), ctx.p.row(j), recon.data(), df);
    kernels::sub(ctx.x.data(), recon.data(), recon.data(), df);
    return std::sqrt(kernels::sum_squares(recon.data(), df));
}

}  // namespace

PoseEstimate predict_oracle(const FactorSet& f, const SinusoidalParams& params,
                            std::span<const double> x, const OracleConfig& cfg,
                            const std::array<std::pair<double, double>, 3>& ranges) {
    const auto t0 = Clock::now();
    const Tensor& w = f.w;
    if (w.order() != 5) throw UsageError("predict_oracle: factor set has no auxiliary tensor");
    if (x.size() != w.dims()[4]) throw UsageError("predict_oracle: feature length mismatch");

    const std::size_t df = x.size();
    PoseEstimate est;
    est.pose = {0.0, 0.0, 0.0};

    double angles[3] = {0.0, 0.0, 0.0};
    std::vector<double> coef[3];
    for (int a = 0; a < 3; ++a)
        coef[a] = eval_axis(params.axis(static_cast<Axis>(a)), angles[a]);

    est.identity_coef =
        solve_identity(w, coef[0], coef[1], coef[2], x, est.rank_deficient);

    auto residual_now = [&]() {
        const std::vector<double> recon =
            reconstruct_sample(w, est.identity_coef, coef[0], coef[1], coef[2]);
        std::vector<double> diff(df);
        kernels::sub(x.data(), recon.data(), diff.data(), df);
        return std::sqrt(kernels::sum_squares(diff.data(), df));
    };

    double residual = residual_now();
    est.residual_history.push_back(residual);

    Tensor w_id_cur = contract_mode(w, est.identity_coef, 1);  // (j_y, j_p, j_r, df)

    est.converged = false;
    for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
        // per-axis 1-D searches with the other two axes fixed
        for (int a = 0; a < 3; ++a) {
            const auto axis = static_cast<Axis>(a);
            const AxisCurves& curves = params.axis(axis);

            // contract the identity-reduced tensor with the two fixed axes
            Tensor reduced = w_id_cur;  // (j_y, j_p, j_r, df)
            if (a != 2) reduced = contract_mode(reduced, coef[2], 3);
            if (a != 1) reduced = contract_mode(reduced, coef[1], 2);
            if (a != 0) reduced = contract_mode(reduced, coef[0], 1);
            // remaining dims: (k_axis, df)
            AxisScanContext ctx;
            ctx.x.assign(x.begin(), x.end());
            const std::size_t k = reduced.dims()[0];
            ctx.p = Matrix(k, df);
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t fi = 0; fi < df; ++fi) ctx.p(j, fi) = reduced.data()[j + k * fi];

            const auto [lo, hi] = ranges[a];
            double best_angle = angles[a];
            double best_res = scan_residual(ctx, curves, best_angle);
            for (double ang = lo; ang <= hi + 1e-9; ang += cfg.coarse_step) {
                const double r = scan_residual(ctx, curves, ang);
                if (r < best_res) {
                    best_res = r;
                    best_angle = ang;
                }
            }

            // golden-section refinement around the coarse winner
            double a_lo = std::max(lo, best_angle - cfg.coarse_step);
            double a_hi = std::min(hi, best_angle + cfg.coarse_step);
            constexpr double kInvPhi = 0.6180339887498949;
            double x1 = a_hi - kInvPhi * (a_hi - a_lo);
            double x2 = a_lo + kInvPhi * (a_hi - a_lo);
            double f1 = scan_residual(ctx, curves, x1);
            double f2 = scan_residual(ctx, curves, x2);
            while (a_hi - a_lo > cfg.refine_tol) {
                if (f1 <= f2) {
                    a_hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = a_hi - kInvPhi * (a_hi - a_lo);
                    f1 = scan_residual(ctx, curves, x1);
                } else {
                    a_lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a_lo + kInvPhi * (a_hi - a_lo);
                    f2 = scan_residual(ctx, curves, x2);
                }
            }
            const double mid = 0.5 * (a_lo + a_hi);
            const double fm = scan_residual(ctx, curves, mid);
            // keep the incumbent if refinement did not actually improve
            if (fm < best_res) {
                best_res = fm;
                best_angle = mid;
            }
            angles[a] = best_angle;
            coef[a] = eval_axis(curves, best_angle);
        }

        // identity re-solve with the updated angles
        bool rd = false;
        est.identity_coef = solve_identity(w, coef[0], coef[1], coef[2], x, rd);
        est.rank_deficient = est.rank_deficient || rd;
        w_id_cur = contract_mode(w, est.identity_coef, 1);

        const double new_residual = residual_now();
        est.residual_history.push_back(new_residual);
        const double change = residual - new_residual;
        residual = new_residual;
        if (change >= 0.0 && change < cfg.rel_tol * std::max(residual, 1e-300)) {
            est.converged = true;
            break;
        }
    }

    est.pose = {angles[0], angles[1], angles[2]};
    est.residual = residual;
    est.elapsed_seconds = seconds_since(t0);
    return est;
}

}  // namespace nlml
