// SPDX-License-Identifier: Apache-2.0

#include "nlml/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlml/errors.hpp"

namespace nlml {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void check_lengths(std::span<const EulerPose> preds, std::span<const EulerPose> gts) {
    if (preds.size() != gts.size()) throw UsageError("metric: pred/gt length mismatch");
    if (preds.empty()) throw UsageError("metric: empty pose lists");
}

double column_angle_deg(const Mat3& a, const Mat3& b, std::size_t col) {
    const auto ca = a.column(col);
    const auto cb = b.column(col);
    const double dot = std::clamp(ca[0] * cb[0] + ca[1] * cb[1] + ca[2] * cb[2], -1.0, 1.0);
    // atan2 of the cross-product norm is exact at 0 and stable for small
    // angles, where acos(dot) loses half the digits
    const double cx = ca[1] * cb[2] - ca[2] * cb[1];
    const double cy = ca[2] * cb[0] - ca[0] * cb[2];
    const double cz = ca[0] * cb[1] - ca[1] * cb[0];
    const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    return std::atan2(cross, dot) * kRadToDeg;
}

}  // namespace

MaeReport mae(std::span<const EulerPose> preds, std::span<const EulerPose> gts) {
    check_lengths(preds, gts);
    MaeReport r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        r.yaw += std::fabs(preds[i].yaw - gts[i].yaw);
        r.pitch += std::fabs(preds[i].pitch - gts[i].pitch);
        r.roll += std::fabs(preds[i].roll - gts[i].roll);
    }
    const double n = static_cast<double>(preds.size());
    r.yaw /= n;
    r.pitch /= n;
    r.roll /= n;
    r.mean = (r.yaw + r.pitch + r.roll) / 3.0;
    return r;
}

MaevReport maev(std::span<const EulerPose> preds, std::span<const EulerPose> gts) {
    check_lengths(preds, gts);
    MaevReport r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Mat3 rp = euler_to_matrix(preds[i]);
        const Mat3 rg = euler_to_matrix(gts[i]);
        r.left += column_angle_deg(rp, rg, 0);
        r.down += column_angle_deg(rp, rg, 1);
        r.front += column_angle_deg(rp, rg, 2);
    }
    const double n = static_cast<double>(preds.size());
    r.left /= n;
    r.down /= n;
    r.front /= n;
    r.mean = (r.left + r.down + r.front) / 3.0;
    return r;
}

IntervalTable interval_errors(std::span<const EulerPose> preds, std::span<const EulerPose> gts,
                              Axis axis, std::size_t n_bins, double lo, double hi) {
    check_lengths(preds, gts);
    if (n_bins == 0) throw UsageError("interval_errors: need at least one bin");
    if (!(hi > lo)) throw UsageError("interval_errors: empty range");

    IntervalTable table;
    table.axis = axis;
    const double width = (hi - lo) / static_cast<double>(n_bins);
    table.bins.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        table.bins[b].lo = lo + width * static_cast<double>(b);
        table.bins[b].hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
    }

    std::vector<double> err_sum(n_bins, 0.0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double g = gts[i][axis];
        if (g < lo - 1e-9 || g > hi + 1e-9)
            throw DataError("interval_errors: ground-truth angle outside the range");
        auto b = static_cast<std::size_t>(std::floor((g - lo) / width));
        if (b >= n_bins) b = n_bins - 1;  // right edge belongs to the last bin
        table.bins[b].count += 1;
        err_sum[b] += std::fabs(preds[i][axis] - g);
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (table.bins[b].count > 0) {
            table.bins[b].mae = err_sum[b] / static_cast<double>(table.bins[b].count);
            table.bins[b].has_mae = true;
        }
    }
    return table;
}

TimingStats timing_from_samples(std::vector<double> seconds) {
    if (seconds.empty()) throw UsageError("timing: no samples");
    TimingStats t;
    t.frames = seconds.size();
    double sum = 0.0;
    for (double s : seconds) sum += s;
    t.mean_seconds = sum / static_cast<double>(seconds.size());
    std::sort(seconds.begin(), seconds.end());
    const std::size_t n = seconds.size();
    t.median_seconds = n % 2 == 1 ? seconds[n / 2]
                                  : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
    const std::size_t p95 = std::min(n - 1, static_cast<std::size_t>(
                                                std::ceil(0.95 * static_cast<double>(n))) -
                                                (n > 1 ? 1 : 0));
    t.p95_seconds = seconds[p95];
    return t;
}

TimingStats benchmark_tpf(const ModelBundle& bundle, const Matrix& samples,
                          std::size_t repeats) {
    if (repeats == 0) throw UsageError("benchmark_tpf: repeats must be >= 1");
    if (samples.rows() == 0) throw UsageError("benchmark_tpf: no samples");

    std::vector<double> times;
    times.reserve(repeats * samples.rows());
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t i = 0; i < samples.rows(); ++i) {
            const std::span<const double> row(samples.row(i), samples.cols());
            const PoseEstimate est = predict_fast(bundle, row);
            times.push_back(est.elapsed_seconds);
        }
    }
    return timing_from_samples(std::move(times));
}

}  // namespace nlml
