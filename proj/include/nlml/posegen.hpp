// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "nlml/tensor.hpp"

namespace nlml {

enum class Axis { Yaw = 0, Pitch = 1, Roll = 2 };

const char* axis_name(Axis a);

/// Euler pose in degrees: yaw about the vertical axis, pitch about the
/// lateral axis, roll about the longitudinal axis.
struct EulerPose {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;

    double operator[](Axis a) const {
        return a == Axis::Yaw ? yaw : (a == Axis::Pitch ? pitch : roll);
    }
};

/// 3x3 row-major rotation matrix.
struct Mat3 {
    std::array<double, 9> m{};

    double operator()(std::size_t r, std::size_t c) const { return m[r * 3 + c]; }
    double& operator()(std::size_t r, std::size_t c) { return m[r * 3 + c]; }
    std::array<double, 3> apply(const std::array<double, 3>& v) const;
    Mat3 transposed() const;
    /// Column c as a unit vector (left/down/front for c = 0/1/2).
    std::array<double, 3> column(std::size_t c) const;
};

/// Ordered 3D landmark cloud. `centroid` and `scale` record the translation
/// and scale removed by the latest normalization (identity for raw shapes).
struct LandmarkSet {
    std::vector<std::array<double, 3>> points;
    std::array<double, 3> centroid{0.0, 0.0, 0.0};
    double scale = 1.0;
};

/// Uniform angle grid per axis, degrees, strictly increasing.
struct PoseGrid {
    std::vector<double> yaw_bins;
    std::vector<double> pitch_bins;
    std::vector<double> roll_bins;

    static PoseGrid uniform(double yaw_lo, double yaw_hi, double yaw_step,
                            double pitch_lo, double pitch_hi, double pitch_step,
                            double roll_lo, double roll_hi, double roll_step);
    /// 10-degree grid: yaw [-50,50], pitch [-40,40], roll [-30,30].
    static PoseGrid defaults();

    const std::vector<double>& bins(Axis a) const;
    std::pair<double, double> range(Axis a) const;
    /// Index of the bin matching `angle` within 1e-6 degrees; throws
    /// DataError when the angle is off-grid.
    std::size_t bin_index(Axis a, double angle) const;
};

struct PoseSample {
    int identity = 0;
    EulerPose pose;
    std::vector<double> features;  // flattened (x,y,z) per landmark
};

struct PoseDataset {
    std::size_t n_landmarks = 0;
    std::vector<PoseSample> samples;

    std::size_t feature_dim() const { return 3 * n_landmarks; }
};

/// Shared deterministic template (asymmetric, non-coplanar) plus a
/// per-identity Gaussian perturbation of the given standard deviation.
/// Identity i draws from an RNG stream derived from (seed, i), so the result
/// does not depend on generation order.
std::vector<LandmarkSet> make_identity_shapes(std::size_t n_id, std::size_t n_landmarks,
                                              double variation, std::uint64_t seed);

/// The shared template used by make_identity_shapes.
LandmarkSet landmark_template(std::size_t n_landmarks);

/// R = R_y(yaw) * R_x(pitch) * R_z(roll), angles in degrees; y is the
/// vertical axis, x the lateral axis, z points toward the camera.
Mat3 euler_to_matrix(const EulerPose& p);

LandmarkSet rotate_shape(const LandmarkSet& shape, const EulerPose& p);

/// Centers the points on their centroid and divides by the RMS distance to
/// it, so the output has zero centroid and unit RMS radius. Throws DataError
/// when all points coincide.
LandmarkSet normalize_landmarks(const LandmarkSet& shape);

/// rotate -> normalize -> flatten; the feature vector of one sample.
std::vector<double> pose_features(const LandmarkSet& base, const EulerPose& p);

/// One sample per identity per (yaw, pitch, roll) grid cell, ordered by
/// identity, then yaw, pitch, roll bins.
PoseDataset generate_dataset(const std::vector<LandmarkSet>& shapes, const PoseGrid& grid);

/// Fills T[id, iy, ip, ir, :] from the matching sample. Requires exactly one
/// sample per (identity, cell); missing or duplicate cells are an error that
/// names the offending cell. Distinct identity ids map to tensor rows in
/// ascending order (returned alongside the tensor).
std::pair<Tensor, std::vector<int>> populate_tensor(const PoseDataset& d, const PoseGrid& grid);

/// Identity-disjoint split; train gets round(fraction * n_id) identities.
std::pair<PoseDataset, PoseDataset> split_dataset(const PoseDataset& d, double train_fraction,
                                                  std::uint64_t seed);

}  // namespace nlml
