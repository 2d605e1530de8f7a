// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "nlml/errors.hpp"
#include "nlml/estimator.hpp"
#include "nlml/kernels.hpp"
#include "test_util.hpp"

using namespace nlml;
using namespace nlml_test;

namespace {

// Small end-to-end fixture shared by the oracle tests: 6 identities on the
// default grid, decomposed at rotation rank 3, curves fitted per axis.
struct Fixture {
    PoseGrid grid = PoseGrid::defaults();
    std::vector<LandmarkSet> shapes;
    PoseDataset dataset;
    FactorSet factors;
    SinusoidalParams params;
    std::array<std::pair<double, double>, 3> ranges{
        std::pair{-50.0, 50.0}, std::pair{-40.0, 40.0}, std::pair{-30.0, 30.0}};

    Fixture() {
        shapes = make_identity_shapes(6, 12, 0.05, 1234);
        dataset = generate_dataset(shapes, grid);
        auto [tensor, ids] = populate_tensor(dataset, grid);
        factors = hosvd(tensor, {kFullRank, 3, 3, 3, kFullRank});
        params.yaw = fit_axis(Axis::Yaw, factors.factors[1], grid.yaw_bins);
        params.pitch = fit_axis(Axis::Pitch, factors.factors[2], grid.pitch_bins);
        params.roll = fit_axis(Axis::Roll, factors.factors[3], grid.roll_bins);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

std::vector<double> factor_row(const Matrix& m, std::size_t r) {
    return std::vector<double>(m.row(r), m.row(r) + m.cols());
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("solve_identity: forward-then-invert recovers the coefficients") {
    const auto& f = fixture();
    Rng rng(71);
    const std::size_t j_id = f.factors.factors[0].cols();
    std::vector<double> a_id(j_id);
    for (auto& v : a_id) v = rng.uniform(-1.0, 1.0);
    const auto a_y = factor_row(f.factors.factors[1], 3);
    const auto a_p = factor_row(f.factors.factors[2], 4);
    const auto a_r = factor_row(f.factors.factors[3], 2);

    const auto x = reconstruct_sample(f.factors.w, a_id, a_y, a_p, a_r);
    bool rd = false;
    const auto got = solve_identity(f.factors.w, a_y, a_p, a_r, x, rd);
    REQUIRE(got.size() == j_id);
    CHECK_FALSE(rd);
    for (std::size_t i = 0; i < j_id; ++i)
        CHECK(got[i] == doctest::Approx(a_id[i]).epsilon(1e-8));
}

TEST_CASE("solve_identity: zero input gives zero coefficients") {
    const auto& f = fixture();
    const auto a_y = factor_row(f.factors.factors[1], 0);
    const auto a_p = factor_row(f.factors.factors[2], 0);
    const auto a_r = factor_row(f.factors.factors[3], 0);
    const std::vector<double> x(f.factors.w.dims()[4], 0.0);
    bool rd = false;
    const auto got = solve_identity(f.factors.w, a_y, a_p, a_r, x, rd);
    for (double v : got) CHECK(std::fabs(v) < 1e-12);
}

TEST_CASE("solve_identity: residual is orthogonal to the design columns") {
    const auto& f = fixture();
    Rng rng(72);
    std::vector<double> x(f.factors.w.dims()[4]);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto a_y = factor_row(f.factors.factors[1], 5);
    const auto a_p = factor_row(f.factors.factors[2], 2);
    const auto a_r = factor_row(f.factors.factors[3], 6);
    bool rd = false;
    const auto coef = solve_identity(f.factors.w, a_y, a_p, a_r, x, rd);

    const auto recon = reconstruct_sample(f.factors.w, coef, a_y, a_p, a_r);
    std::vector<double> resid(x.size());
    kernels::sub(x.data(), recon.data(), resid.data(), x.size());
    // columns of the design matrix: unit identity vectors through the model
    const std::size_t j_id = coef.size();
    for (std::size_t a = 0; a < j_id; ++a) {
        std::vector<double> e(j_id, 0.0);
        e[a] = 1.0;
        const auto col = reconstruct_sample(f.factors.w, e, a_y, a_p, a_r);
        CHECK(std::fabs(kernels::dot(col.data(), resid.data(), x.size())) < 1e-8);
    }
}

TEST_CASE("solve_identity: rank-deficient system flags and returns minimum norm") {
    // duplicate identity slices make the design matrix rank 1
    Tensor w({2, 2, 2, 2, 4});
    std::vector<std::size_t> idx(5);
    for (idx[1] = 0; idx[1] < 2; ++idx[1])
        for (idx[2] = 0; idx[2] < 2; ++idx[2])
            for (idx[3] = 0; idx[3] < 2; ++idx[3])
                for (idx[4] = 0; idx[4] < 4; ++idx[4]) {
                    const double v = 1.0 + static_cast<double>(idx[1] + 2 * idx[2] + 3 * idx[4]);
                    idx[0] = 0;
                    w.at(idx) = v;
                    idx[0] = 1;
                    w.at(idx) = v;  // identical second identity dimension
                }
    const std::vector<double> ones{1.0, 1.0};
    const std::vector<double> x{4.0, 8.0, 12.0, 16.0};
    bool rd = false;
    const auto coef = solve_identity(w, ones, ones, ones, x, rd);
    CHECK(rd);
    // minimum-norm solution splits the weight evenly across the two
    // indistinguishable identity dimensions
    CHECK(coef[0] == doctest::Approx(coef[1]).epsilon(1e-10));
}

TEST_CASE("predict_oracle: recovers an on-grid training pose") {
    const auto& f = fixture();
    const EulerPose truth{20.0, -10.0, 10.0};
    const auto x = pose_features(f.shapes[2], truth);
    const PoseEstimate est = predict_oracle(f.factors, f.params, x, OracleConfig{}, f.ranges);
    CHECK(std::fabs(est.pose.yaw - truth.yaw) < 0.5);
    CHECK(std::fabs(est.pose.pitch - truth.pitch) < 0.5);
    CHECK(std::fabs(est.pose.roll - truth.roll) < 0.5);
    CHECK(est.residual < 0.5);
}

TEST_CASE("predict_oracle: frontal pose maps to the origin") {
    const auto& f = fixture();
    const auto x = pose_features(f.shapes[0], {0, 0, 0});
    const PoseEstimate est = predict_oracle(f.factors, f.params, x, OracleConfig{}, f.ranges);
    CHECK(std::fabs(est.pose.yaw) <= 0.5);
    CHECK(std::fabs(est.pose.pitch) <= 0.5);
    CHECK(std::fabs(est.pose.roll) <= 0.5);
}

TEST_CASE("predict_oracle: exact model samples recover angles to the refinement step") {
    // synthesize x directly on the cosine manifolds, so the only error left
    // is the search resolution
    const auto& f = fixture();
    const EulerPose truth{-23.0, 17.0, -7.0};
    std::vector<double> a_id(f.factors.factors[0].cols(), 0.0);
    a_id[0] = 0.8;
    a_id[1] = -0.4;
    auto curve_at = [&](const AxisCurves& c, double w) {
        std::vector<double> v(c.dims.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = eval_curve(c.dims[j].params, w);
        return v;
    };
    const auto x = reconstruct_sample(f.factors.w, a_id, curve_at(f.params.yaw, truth.yaw),
                                      curve_at(f.params.pitch, truth.pitch),
                                      curve_at(f.params.roll, truth.roll));
    const PoseEstimate est = predict_oracle(f.factors, f.params, x, OracleConfig{}, f.ranges);
    CHECK(std::fabs(est.pose.yaw - truth.yaw) <= 0.1);
    CHECK(std::fabs(est.pose.pitch - truth.pitch) <= 0.1);
    CHECK(std::fabs(est.pose.roll - truth.roll) <= 0.1);
    // residual floors at the angle-search resolution, far below the
    // truncation-error scale of real samples
    CHECK(est.residual < 1e-2);
    CHECK(est.converged);
}

TEST_CASE("predict_oracle: residual history is non-increasing") {
    const auto& f = fixture();
    const auto x = pose_features(f.shapes[4], {-30.0, 20.0, -10.0});
    const PoseEstimate est = predict_oracle(f.factors, f.params, x, OracleConfig{}, f.ranges);
    REQUIRE(est.residual_history.size() >= 2);
    for (std::size_t i = 1; i < est.residual_history.size(); ++i)
        CHECK(est.residual_history[i] <= est.residual_history[i - 1] + 1e-12);
}

TEST_CASE("predict_oracle: feature length mismatch") {
    const auto& f = fixture();
    const std::vector<double> bad(7, 0.0);
    CHECK_THROWS_AS(predict_oracle(f.factors, f.params, bad, OracleConfig{}, f.ranges),
                    UsageError);
}

TEST_CASE("predict_fast: deterministic, structural checks, clamping") {
    // hand-built bundle: encoder emits its biases (zero weights), heads are
    // single linear layers returning fixed out-of-range / in-range values
    ModelBundle bundle;
    bundle.ranges = {std::pair{-50.0, 50.0}, std::pair{-40.0, 40.0}, std::pair{-30.0, 30.0}};
    bundle.encoder = build_encoder(12, 7);
    for (auto& l : bundle.encoder.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.1);
    }
    auto make_const_head = [](NetRole role, double value) {
        DenseNet head;
        head.role = role;
        Layer l;
        l.in = 3;
        l.out = 1;
        l.activation = Activation::Identity;
        l.weights = {0, 0, 0};
        l.bias = {value};
        head.layers.push_back(l);
        return head;
    };
    bundle.head_yaw = make_const_head(NetRole::HeadYaw, 77.0);   // beyond +50
    bundle.head_pitch = make_const_head(NetRole::HeadPitch, -12.0);
    bundle.head_roll = make_const_head(NetRole::HeadRoll, 5.0);

    const std::vector<double> x(12, 0.25);
    const PoseEstimate e1 = predict_fast(bundle, x);
    const PoseEstimate e2 = predict_fast(bundle, x);
    CHECK(e1.pose.yaw == 50.0);  // clamped
    CHECK(e1.unclamped[0] == 77.0);
    CHECK(e1.clamped);
    CHECK(e1.pose.pitch == -12.0);
    CHECK(e1.pose.roll == 5.0);
    CHECK(e1.latents.size() == 9);
    // pure function of (bundle, landmarks)
    CHECK(e1.pose.yaw == e2.pose.yaw);
    CHECK(e1.latents == e2.latents);

    CHECK_THROWS_AS(predict_fast(bundle, std::vector<double>(5, 0.0)), UsageError);
    std::vector<double> nan_x(12, 0.0);
    nan_x[3] = std::nan("");
    CHECK_THROWS_AS(predict_fast(bundle, nan_x), NumericError);
}

}  // TEST_SUITE
