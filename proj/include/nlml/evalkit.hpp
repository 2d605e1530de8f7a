// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlml/estimator.hpp"
#include "nlml/posegen.hpp"

namespace nlml {

/// Per-angle mean absolute error, degrees.
struct MaeReport {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    double mean = 0.0;
};

/// Per-column angular error of the rotation matrices (left/down/front),
/// degrees.
struct MaevReport {
    double left = 0.0;
    double down = 0.0;
    double front = 0.0;
    double mean = 0.0;
};

struct TimingStats {
    double mean_seconds = 0.0;
    double median_seconds = 0.0;
    double p95_seconds = 0.0;
    std::size_t frames = 0;
};

struct MetricReport {
    MaeReport mae;
    MaevReport maev;
    std::size_t samples = 0;
    TimingStats timing;
};

struct IntervalBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mae = 0.0;
    bool has_mae = false;  // false for empty bins
};

struct IntervalTable {
    Axis axis = Axis::Yaw;
    std::vector<IntervalBin> bins;
};

MaeReport mae(std::span<const EulerPose> preds, std::span<const EulerPose> gts);

/// Converts both poses to rotation matrices and measures, per column, the
/// angle arccos(<pred_col, gt_col>) with the dot product clamped to [-1, 1].
MaevReport maev(std::span<const EulerPose> preds, std::span<const EulerPose> gts);

/// Uniform bins over [lo, hi]; each sample goes to the bin containing its
/// ground-truth angle (left-closed, last bin right-closed).
IntervalTable interval_errors(std::span<const EulerPose> preds, std::span<const EulerPose> gts,
                              Axis axis, std::size_t n_bins, double lo, double hi);

/// Wall-clock per fast-path prediction over `repeats` passes through the
/// sample rows; single-threaded by construction.
TimingStats benchmark_tpf(const ModelBundle& bundle, const Matrix& samples, std::size_t repeats);

TimingStats timing_from_samples(std::vector<double> seconds);

}  // namespace nlml
