// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "nlml/dense_net.hpp"
#include "nlml/hosvd.hpp"
#include "nlml/posegen.hpp"
#include "nlml/sinusoid.hpp"

namespace nlml {

/// Encoder + three heads concatenated, with the angle ranges they were
/// trained for (used for output clamping).
struct ModelBundle {
    DenseNet encoder;
    DenseNet head_yaw;
    DenseNet head_pitch;
    DenseNet head_roll;
    std::array<std::pair<double, double>, 3> ranges{};  // yaw, pitch, roll

    const DenseNet& head(Axis a) const {
        return a == Axis::Yaw ? head_yaw : (a == Axis::Pitch ? head_pitch : head_roll);
    }
};

struct PoseEstimate {
    EulerPose pose;
    /// Raw head outputs before range clamping.
    std::array<double, 3> unclamped{};
    bool clamped = false;
    /// Fast path: the encoder's 9 latent coordinates.
    std::vector<double> latents;
    /// Oracle: fitted identity coefficients and reconstruction data.
    std::vector<double> identity_coef;
    double residual = 0.0;
    bool rank_deficient = false;
    bool converged = true;
    /// Oracle residual after each outer iteration; non-increasing.
    std::vector<double> residual_history;
    double elapsed_seconds = 0.0;
};

/// Encoder -> 9 latents -> three heads -> degrees. Landmarks must already be
/// normalized (zero centroid, unit RMS radius). Out-of-range predictions are
/// clamped and flagged; the raw values stay in `unclamped`.
PoseEstimate predict_fast(const ModelBundle& bundle, std::span<const double> landmarks);

/// Least-squares identity coefficients for fixed angle vectors: solves
/// min ||x - w x2 a_y x3 a_p x4 a_r x1 a_id|| over a_id. Rank-deficient
/// systems get the minimum-norm solution and a flag.
std::vector<double> solve_identity(const Tensor& w, std::span<const double> a_y,
                                   std::span<const double> a_p, std::span<const double> a_r,
                                   std::span<const double> x, bool& rank_deficient);

struct OracleConfig {
    double coarse_step = 2.0;   // degrees, per-axis scan
    double refine_tol = 0.05;   // degrees, golden-section interval
    std::size_t max_outer = 20;
    double rel_tol = 1e-8;
};

/// Reconstruction-based estimator: alternating per-axis 1-D search over the
/// cosine-parameterized curves with identity least-squares re-solves.
PoseEstimate predict_oracle(const FactorSet& f, const SinusoidalParams& params,
                            std::span<const double> x, const OracleConfig& cfg,
                            const std::array<std::pair<double, double>, 3>& ranges);

}  // namespace nlml
