// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "nlml/matrix.hpp"
#include "nlml/posegen.hpp"

namespace nlml {

/// One cosine curve f(w) = amplitude * cos(frequency * w + phase) + offset,
/// with w in degrees and frequency in radians per degree. Canonical form:
/// amplitude >= 0, frequency > 0, phase in [-pi, pi). Degenerate (constant)
/// curves carry amplitude 0 and placeholder frequency/phase.
struct CosineParams {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    double offset = 0.0;
    bool degenerate = false;
};

struct CosineFit {
    CosineParams params;
    double residual_rms = 0.0;
    bool converged = false;
    /// Sum of squared residuals after each accepted Levenberg-Marquardt
    /// step, starting from the initial guess; non-increasing.
    std::vector<double> sse_history;
};

/// All fitted curves for one rotation axis; dims[j] models factor column j
/// over grid_angles.
struct AxisCurves {
    Axis axis = Axis::Yaw;
    std::vector<double> grid_angles;
    std::vector<CosineFit> dims;
};

/// Per-axis cosine models for the three rotation subspaces.
struct SinusoidalParams {
    AxisCurves yaw;
    AxisCurves pitch;
    AxisCurves roll;

    const AxisCurves& axis(Axis a) const {
        return a == Axis::Yaw ? yaw : (a == Axis::Pitch ? pitch : roll);
    }
    AxisCurves& axis(Axis a) { return a == Axis::Yaw ? yaw : (a == Axis::Pitch ? pitch : roll); }
};

/// Factor rows resampled on a fine angle grid: row i holds
/// (f_1(w_i), ..., f_K(w_i)) at w_i = angle_min + i*step.
struct FineFactorTable {
    Axis axis = Axis::Yaw;
    double angle_min = 0.0;
    double angle_max = 0.0;
    double step = 0.0;
    Matrix rows;

    double angle_at(std::size_t i) const { return angle_min + static_cast<double>(i) * step; }
};

/// Initial estimate from the discrete Fourier transform of the mean-removed
/// samples: offset = mean, the dominant spectral peak supplies frequency,
/// amplitude (2|V|/N) and phase. Requires >= 4 uniformly spaced samples.
CosineParams fourier_init(std::span<const double> values, std::span<const double> angles);

/// Damped Gauss-Newton (Levenberg-Marquardt) refinement with the analytic
/// Jacobian, run from `init` plus a few alternative spectral starts; stops
/// when the relative residual change drops below 1e-10 or after 5000
/// iterations. Result is canonicalized.
CosineFit fit_cosine(std::span<const double> values, std::span<const double> angles,
                     const CosineParams& init);

/// Fits every column of a factor matrix (one curve per retained dimension).
AxisCurves fit_axis(Axis axis, const Matrix& factor, std::span<const double> angles);

/// The model formula itself.
double eval_curve(const CosineParams& p, double angle_deg);

/// Canonical form: amplitude >= 0, frequency > 0, phase wrapped to [-pi, pi).
CosineParams canonicalize(const CosineParams& p);

FineFactorTable gen_fine_factors(const AxisCurves& curves, double angle_min, double angle_max,
                                 double step);

}  // namespace nlml
