// SPDX-License-Identifier: Apache-2.0

#include "nlml/posegen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "nlml/errors.hpp"
#include "nlml/rng.hpp"

namespace nlml {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kBinTolerance = 1e-6;  // degrees

std::vector<double> uniform_bins(double lo, double hi, double step, const char* axis) {
    if (!(step > 0.0) || !(hi > lo))
        throw UsageError(std::string("PoseGrid: invalid range for ") + axis);
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> bins(count);
    for (std::size_t i = 0; i < count; ++i) bins[i] = lo + static_cast<double>(i) * step;
    if (std::fabs(bins.back() - hi) > kBinTolerance)
        throw UsageError(std::string("PoseGrid: step does not divide the ") + axis + " range");
    return bins;
}

}  // namespace

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::Yaw: return "yaw";
        case Axis::Pitch: return "pitch";
        default: return "roll";
    }
}

std::array<double, 3> Mat3::apply(const std::array<double, 3>& v) const {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) t(c, r) = (*this)(r, c);
    return t;
}

std::array<double, 3> Mat3::column(std::size_t c) const {
    return {m[c], m[3 + c], m[6 + c]};
}

PoseGrid PoseGrid::uniform(double yaw_lo, double yaw_hi, double yaw_step,
                           double pitch_lo, double pitch_hi, double pitch_step,
                           double roll_lo, double roll_hi, double roll_step) {
    PoseGrid g;
    g.yaw_bins = uniform_bins(yaw_lo, yaw_hi, yaw_step, "yaw");
    g.pitch_bins = uniform_bins(pitch_lo, pitch_hi, pitch_step, "pitch");
    g.roll_bins = uniform_bins(roll_lo, roll_hi, roll_step, "roll");
    return g;
}

PoseGrid PoseGrid::defaults() {
    return uniform(-50, 50, 10, -40, 40, 10, -30, 30, 10);
}

const std::vector<double>& PoseGrid::bins(Axis a) const {
    switch (a) {
        case Axis::Yaw: return yaw_bins;
        case Axis::Pitch: return pitch_bins;
        default: return roll_bins;
    }
}

std::pair<double, double> PoseGrid::range(Axis a) const {
    const auto& b = bins(a);
    if (b.empty()) throw UsageError("PoseGrid: empty axis");
    return {b.front(), b.back()};
}

std::size_t PoseGrid::bin_index(Axis a, double angle) const {
    const auto& b = bins(a);
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (std::fabs(b[i] - angle) <= kBinTolerance) return i;
    }
    std::ostringstream oss;
    oss << "off-grid " << axis_name(a) << " angle " << angle;
    throw DataError(oss.str());
}

LandmarkSet landmark_template(std::size_t n_landmarks) {
    if (n_landmarks < 4) throw UsageError("landmark_template: need at least 4 landmarks");
    // Golden-angle spiral over an ellipsoid with an asymmetric warp; the
    // warp breaks bilateral symmetry so yaw sign is observable.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    LandmarkSet shape;
    shape.points.resize(n_landmarks);
    const double n = static_cast<double>(n_landmarks);
    for (std::size_t i = 0; i < n_landmarks; ++i) {
        const double u = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - u * u));
        const double th = golden * static_cast<double>(i);
        double x = 0.95 * r * std::cos(th) + 0.13 * std::sin(2.1 * u + 0.4);
        double y = 1.15 * u + 0.06 * std::cos(3.0 * th + 0.9);
        double z = 0.62 * r * std::sin(th) + 0.35 * u * u + 0.08 * std::cos(th + 0.25);
        shape.points[i] = {x, y, z};
    }
    return shape;
}

std::vector<LandmarkSet> make_identity_shapes(std::size_t n_id, std::size_t n_landmarks,
                                              double variation, std::uint64_t seed) {
    if (n_id < 1) throw UsageError("make_identity_shapes: need at least one identity");
    if (variation < 0.0) throw UsageError("make_identity_shapes: negative variation");
    const LandmarkSet base = landmark_template(n_landmarks);

    // reject degenerate templates: all points coincident or coplanar
    {
        std::array<double, 3> c{0, 0, 0};
        for (const auto& p : base.points)
            for (int k = 0; k < 3; ++k) c[k] += p[k];
        for (int k = 0; k < 3; ++k) c[k] /= static_cast<double>(base.points.size());
        double cov[3][3] = {};
        for (const auto& p : base.points)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) cov[a][b] += (p[a] - c[a]) * (p[b] - c[b]);
        const double tr = cov[0][0] + cov[1][1] + cov[2][2];
        const double det = cov[0][0] * (cov[1][1] * cov[2][2] - cov[1][2] * cov[2][1]) -
                           cov[0][1] * (cov[1][0] * cov[2][2] - cov[1][2] * cov[2][0]) +
                           cov[0][2] * (cov[1][0] * cov[2][1] - cov[1][1] * cov[2][0]);
        const double unit = tr / 3.0;
        if (!(tr > 0.0) || det <= 1e-12 * unit * unit * unit)
            throw DataError("make_identity_shapes: degenerate (coplanar) template");
    }

    Rng root(seed);
    std::vector<LandmarkSet> shapes(n_id, base);
    for (std::size_t id = 0; id < n_id; ++id) {
        Rng stream = root.derive(id);
        for (auto& p : shapes[id].points)
            for (int k = 0; k < 3; ++k) p[k] += variation * stream.gaussian();
    }
    return shapes;
}

Mat3 euler_to_matrix(const EulerPose& p) {
    const double cy = std::cos(p.yaw * kDegToRad), sy = std::sin(p.yaw * kDegToRad);
    const double cx = std::cos(p.pitch * kDegToRad), sx = std::sin(p.pitch * kDegToRad);
    const double cz = std::cos(p.roll * kDegToRad), sz = std::sin(p.roll * kDegToRad);
    // R_y(yaw) * R_x(pitch) * R_z(roll)
    Mat3 r;
    r.m = {cy * cz + sy * sx * sz, -cy * sz + sy * sx * cz, sy * cx,
           cx * sz,                cx * cz,                 -sx,
           -sy * cz + cy * sx * sz, sy * sz + cy * sx * cz, cy * cx};
    return r;
}

LandmarkSet rotate_shape(const LandmarkSet& shape, const EulerPose& p) {
    const Mat3 r = euler_to_matrix(p);
    LandmarkSet out = shape;
    for (auto& pt : out.points) pt = r.apply(pt);
    return out;
}

LandmarkSet normalize_landmarks(const LandmarkSet& shape) {
    const std::size_t n = shape.points.size();
    if (n < 2) throw UsageError("normalize_landmarks: need at least two points");
    std::array<double, 3> c{0, 0, 0};
    for (const auto& p : shape.points)
        for (int k = 0; k < 3; ++k) c[k] += p[k];
    for (int k = 0; k < 3; ++k) c[k] /= static_cast<double>(n);

    double ms = 0.0;
    for (const auto& p : shape.points) {
        for (int k = 0; k < 3; ++k) {
            const double d = p[k] - c[k];
            ms += d * d;
        }
    }
    const double s = std::sqrt(ms / static_cast<double>(n));
    if (s <= 0.0) throw DataError("normalize_landmarks: all points coincide (scale is zero)");

    LandmarkSet out;
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) out.points[i][k] = (shape.points[i][k] - c[k]) / s;
    out.centroid = c;
    out.scale = s;
    return out;
}

std::vector<double> pose_features(const LandmarkSet& base, const EulerPose& p) {
    const LandmarkSet n = normalize_landmarks(rotate_shape(base, p));
    std::vector<double> f;
    f.reserve(3 * n.points.size());
    for (const auto& pt : n.points) {
        f.push_back(pt[0]);
        f.push_back(pt[1]);
        f.push_back(pt[2]);
    }
    return f;
}

PoseDataset generate_dataset(const std::vector<LandmarkSet>& shapes, const PoseGrid& grid) {
    if (shapes.empty()) throw UsageError("generate_dataset: no shapes");
    if (grid.yaw_bins.empty() || grid.pitch_bins.empty() || grid.roll_bins.empty())
        throw UsageError("generate_dataset: empty grid");

    PoseDataset d;
    d.n_landmarks = shapes.front().points.size();
    d.samples.reserve(shapes.size() * grid.yaw_bins.size() * grid.pitch_bins.size() *
                      grid.roll_bins.size());
    for (std::size_t id = 0; id < shapes.size(); ++id) {
        if (shapes[id].points.size() != d.n_landmarks)
            throw UsageError("generate_dataset: inconsistent landmark counts");
        for (double yaw : grid.yaw_bins)
            for (double pitch : grid.pitch_bins)
                for (double roll : grid.roll_bins) {
                    PoseSample s;
                    s.identity = static_cast<int>(id);
                    s.pose = {yaw, pitch, roll};
                    s.features = pose_features(shapes[id], s.pose);
                    d.samples.push_back(std::move(s));
                }
    }
    return d;
}

std::pair<Tensor, std::vector<int>> populate_tensor(const PoseDataset& d, const PoseGrid& grid) {
    if (d.samples.empty()) throw DataError("populate_tensor: empty dataset");
    const std::size_t df = d.feature_dim();

    std::set<int> id_set;
    for (const auto& s : d.samples) id_set.insert(s.identity);
    std::vector<int> ids(id_set.begin(), id_set.end());
    std::map<int, std::size_t> id_row;
    for (std::size_t i = 0; i < ids.size(); ++i) id_row[ids[i]] = i;

    const std::size_t n_id = ids.size();
    const std::size_t dy = grid.yaw_bins.size();
    const std::size_t dp = grid.pitch_bins.size();
    const std::size_t dr = grid.roll_bins.size();

    Tensor t({n_id, dy, dp, dr, df});
    std::vector<std::uint8_t> filled(n_id * dy * dp * dr, 0);

    auto cell_text = [&](std::size_t iy, std::size_t ip, std::size_t ir) {
        std::ostringstream oss;
        oss << "(yaw=" << grid.yaw_bins[iy] << ", pitch=" << grid.pitch_bins[ip]
            << ", roll=" << grid.roll_bins[ir] << ")";
        return oss.str();
    };

    for (const auto& s : d.samples) {
        if (s.features.size() != df)
            throw DataError("populate_tensor: inconsistent feature length");
        const std::size_t row = id_row.at(s.identity);
        const std::size_t iy = grid.bin_index(Axis::Yaw, s.pose.yaw);
        const std::size_t ip = grid.bin_index(Axis::Pitch, s.pose.pitch);
        const std::size_t ir = grid.bin_index(Axis::Roll, s.pose.roll);
        std::uint8_t& seen = filled[row + n_id * (iy + dy * (ip + dp * ir))];
        if (seen) {
            throw DataError("populate_tensor: duplicate sample for identity " +
                            std::to_string(s.identity) + " at cell " + cell_text(iy, ip, ir));
        }
        seen = 1;
        // feature mode is mode 5: stride n_id*dy*dp*dr
        const std::size_t base = row + n_id * (iy + dy * (ip + dp * ir));
        const std::size_t stride = n_id * dy * dp * dr;
        double* data = t.data();
        for (std::size_t f = 0; f < df; ++f) data[base + f * stride] = s.features[f];
    }

    for (std::size_t row = 0; row < n_id; ++row)
        for (std::size_t iy = 0; iy < dy; ++iy)
            for (std::size_t ip = 0; ip < dp; ++ip)
                for (std::size_t ir = 0; ir < dr; ++ir)
                    if (!filled[row + n_id * (iy + dy * (ip + dp * ir))]) {
                        throw DataError("populate_tensor: missing sample for identity " +
                                        std::to_string(ids[row]) + " at cell " +
                                        cell_text(iy, ip, ir));
                    }

    return {std::move(t), std::move(ids)};
}

std::pair<PoseDataset, PoseDataset> split_dataset(const PoseDataset& d, double train_fraction,
                                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw UsageError("split_dataset: fraction must be in (0, 1)");
    std::set<int> id_set;
    for (const auto& s : d.samples) id_set.insert(s.identity);
    std::vector<int> ids(id_set.begin(), id_set.end());

    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(ids.size())));
    if (n_train == 0 || n_train == ids.size())
        throw UsageError("split_dataset: fraction yields an empty side");

    Rng rng(seed);
    shuffle(ids, rng);
    std::set<int> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

    PoseDataset train, test;
    train.n_landmarks = test.n_landmarks = d.n_landmarks;
    for (const auto& s : d.samples) {
        (train_ids.count(s.identity) ? train : test).samples.push_back(s);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace nlml
