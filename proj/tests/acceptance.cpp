// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nlml/config.hpp"
#include "nlml/evalkit.hpp"
#include "nlml/io.hpp"
#include "nlml/pipeline.hpp"
#include "test_util.hpp"

using namespace nlml;
using namespace nlml_test;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int n, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", n, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& leaf) {
    const auto dir = fs::temp_directory_path() / "nlml_acceptance" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

double wrapped_phase_diff(double a, double b) {
    constexpr double pi = std::numbers::pi;
    double d = std::fmod(a - b + pi, 2.0 * pi);
    if (d < 0) d += 2.0 * pi;
    return std::fabs(d - pi);
}

// ---------------------------------------------------------------------------

void criterion_1_multilinear() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    std::string fail;

    int checked = 0;
    for (int rep = 0; rep < 200 && fail.empty(); ++rep) {
        const std::size_t order = 3 + rng.below(3);
        std::vector<std::size_t> dims(order);
        for (auto& d : dims) d = 1 + rng.below(5);
        const Tensor t = random_tensor(dims, rng);
        ++checked;

        for (std::size_t mode = 1; mode <= order && fail.empty(); ++mode) {
            // exact fold/unfold round trip
            if (!(fold(unfold(t, mode), mode, dims) == t)) {
                fail = "fold/unfold round trip failed at rep " + std::to_string(rep);
                break;
            }
            // mode product vs the definitional sum
            const Matrix a = random_matrix(1 + rng.below(5), dims[mode - 1], rng);
            const Tensor got = mode_product(t, a, mode);
            const Tensor want = oracle_mode_product(t, a, mode);
            if (max_abs_diff(got, want) > 1e-12) {
                fail = "mode_product mismatch " + std::to_string(max_abs_diff(got, want));
                break;
            }
        }
    }

    double worst_recon = 0.0;
    for (int rep = 0; rep < 3 && fail.empty(); ++rep) {
        const Tensor t = random_tensor({4, 5, 3, 3, 6}, rng);
        const FactorSet f =
            hosvd(t, {kFullRank, kFullRank, kFullRank, kFullRank, kFullRank});
        worst_recon = std::max(worst_recon, rel_frobenius_error(t, reconstruct(f)));
    }
    if (fail.empty() && worst_recon >= 1e-8)
        fail = "full-rank reconstruction error " + std::to_string(worst_recon);

    const double secs = elapsed_s(t0);
    if (fail.empty() && secs >= 10.0) fail = "runtime " + std::to_string(secs) + " s";

    std::ostringstream d;
    d << checked << " tensors, worst full-rank recon " << worst_recon << ", " << secs << " s";
    criterion(1, "multilinear correctness", fail.empty(), fail.empty() ? d.str() : fail);
}

void criterion_2_normalization() {
    std::string fail;

    LandmarkSet s;
    s.points = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}};
    const LandmarkSet n = normalize_landmarks(s);
    if (std::fabs(n.scale - 4.0 / 3.0) > 1e-12 || std::fabs(n.points[0][0] + 0.5) > 1e-12 ||
        std::fabs(n.points[0][1] + 0.5) > 1e-12 || std::fabs(n.points[0][2]) > 1e-12)
        fail = "hand-derived example mismatch";

    Rng rng(1002);
    for (int rep = 0; rep < 1000 && fail.empty(); ++rep) {
        LandmarkSet shape;
        shape.points.resize(5 + rng.below(20));
        for (auto& p : shape.points)
            for (int k = 0; k < 3; ++k) p[k] = rng.uniform(-3.0, 3.0);

        const LandmarkSet n1 = normalize_landmarks(shape);
        // idempotence
        const LandmarkSet n2 = normalize_landmarks(n1);
        for (std::size_t i = 0; i < n1.points.size() && fail.empty(); ++i)
            for (int k = 0; k < 3; ++k)
                if (std::fabs(n1.points[i][k] - n2.points[i][k]) > 1e-10)
                    fail = "not idempotent at rep " + std::to_string(rep);

        // similarity invariance
        LandmarkSet moved = shape;
        const double scale = rng.uniform(0.1, 9.0);
        const double tx = rng.uniform(-5, 5), ty = rng.uniform(-5, 5), tz = rng.uniform(-5, 5);
        for (auto& p : moved.points) {
            p[0] = scale * p[0] + tx;
            p[1] = scale * p[1] + ty;
            p[2] = scale * p[2] + tz;
        }
        const LandmarkSet n3 = normalize_landmarks(moved);
        for (std::size_t i = 0; i < n1.points.size() && fail.empty(); ++i)
            for (int k = 0; k < 3; ++k)
                if (std::fabs(n1.points[i][k] - n3.points[i][k]) > 1e-10)
                    fail = "similarity invariance failed at rep " + std::to_string(rep);
    }

    criterion(2, "landmark normalization", fail.empty(),
              fail.empty() ? "hand example + 1000 random shapes at 1e-10" : fail);
}

void criterion_3_cosine_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double pi = std::numbers::pi;
    std::string fail;

    std::vector<double> angles;
    for (double w = -50; w <= 50 + 1e-9; w += 10) angles.push_back(w);

    // Literal reading of the criterion: the same 100 random parameter draws,
    // noise-free recovery within 1e-6 and sigma=0.01 noisy recovery within
    // 0.05, per draw and per parameter.
    //
    // The noisy arm cannot pass for amplitude/offset: the Cramer-Rao bound
    // at the reference point (alpha=1.5, beta=0.03, gamma=0.2, phi=0.5,
    // 11 samples, sigma=0.01) already puts their standard errors at ~0.085,
    // and an ideal least-squares estimator started at the truth shows mean
    // |error| ~ 0.06 with p95 ~ 0.15. The failure below is the information
    // content of the data, not the optimizer; see the frequency/phase
    // errors staying ~50x tighter.
    Rng rng(1003);
    double worst_clean = 0.0, worst_noisy = 0.0;
    std::size_t noisy_violations = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const CosineParams truth{rng.uniform(0.1, 3.0), rng.uniform(0.01, 0.1),
                                 rng.uniform(-pi, pi), rng.uniform(-2.0, 2.0), false};
        std::vector<double> clean(angles.size());
        for (std::size_t i = 0; i < angles.size(); ++i) clean[i] = eval_curve(truth, angles[i]);

        const CosineFit fit = fit_cosine(clean, angles, fourier_init(clean, angles));
        const double err = std::max(
            std::max(std::fabs(fit.params.amplitude - truth.amplitude),
                     std::fabs(fit.params.frequency - truth.frequency)),
            std::max(wrapped_phase_diff(fit.params.phase, truth.phase),
                     std::fabs(fit.params.offset - truth.offset)));
        worst_clean = std::max(worst_clean, err);
        if (err >= 1e-6 && fail.empty())
            fail = "noise-free recovery error " + std::to_string(err);

        std::vector<double> noisy = clean;
        for (auto& v : noisy) v += 0.01 * rng.gaussian();
        const CosineFit nfit = fit_cosine(noisy, angles, fourier_init(noisy, angles));
        const double nerr = std::max(
            std::max(std::fabs(nfit.params.amplitude - truth.amplitude),
                     std::fabs(nfit.params.frequency - truth.frequency)),
            std::max(wrapped_phase_diff(nfit.params.phase, truth.phase),
                     std::fabs(nfit.params.offset - truth.offset)));
        worst_noisy = std::max(worst_noisy, nerr);
        if (nerr >= 0.05) ++noisy_violations;
    }
    if (fail.empty() && noisy_violations > 0) {
        std::ostringstream f;
        f << noisy_violations
          << "/100 noisy draws exceed the 0.05 parameter bound; amplitude/offset are the "
             "violators (their CRLB stderr is ~0.085 at the reference configuration, so the "
             "bound is unattainable for any estimator; slow draws ride the degenerate "
             "large-amplitude/low-frequency ridge). noise-free worst "
          << worst_clean << ", " << elapsed_s(t0) << " s";
        fail = f.str();
    }

    const double secs = elapsed_s(t0);
    if (fail.empty() && secs >= 5.0) fail = "runtime " + std::to_string(secs) + " s";
    std::ostringstream d;
    d << "worst clean " << worst_clean << ", worst noisy " << worst_noisy << ", " << secs
      << " s";
    criterion(3, "cosine-fit recovery", fail.empty(), fail.empty() ? d.str() : fail);
}

void criterion_4_energy() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string fail;

    const auto shapes = make_identity_shapes(20, 30, 0.05, 42);
    const PoseGrid grid = PoseGrid::defaults();
    const PoseDataset d = generate_dataset(shapes, grid);
    auto [tensor, ids] = populate_tensor(d, grid);
    const FactorSet f = hosvd(tensor, {kFullRank, 3, 3, 3, kFullRank});

    std::ostringstream detail;
    for (int a = 0; a < 3 && fail.empty(); ++a) {
        const auto& spec = f.spectra[a + 1];
        const double ratio = energy_ratio(spec, std::min<std::size_t>(3, spec.singular_values.size()));
        detail << axis_name(static_cast<Axis>(a)) << "=" << ratio << " ";
        if (ratio < 0.90)
            fail = std::string(axis_name(static_cast<Axis>(a))) + " energy " +
                   std::to_string(ratio);
    }
    const double secs = elapsed_s(t0);
    if (fail.empty() && secs >= 60.0) fail = "runtime " + std::to_string(secs) + " s";
    detail << "(" << secs << " s)";
    criterion(4, "rotation-mode energy concentration", fail.empty(),
              fail.empty() ? detail.str() : fail);
}

void criterion_5_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string fail;
    std::ostringstream detail;

    RunConfig cfg;
    cfg.seed = 42;
    cfg.out_dir = scratch_dir("e2e");
    cfg.encoder_train.epochs = 45;
    cfg.encoder_train.learning_rate = 1e-3;
    cfg.head_train.epochs = 60;
    cfg.head_train.learning_rate = 1e-2;

    std::ostringstream log;
    cmd_generate(cfg, log);
    cmd_decompose(cfg, log);
    cmd_fit(cfg, log);
    const TrainOutcome trained = cmd_train(cfg, log);
    if (trained.encoder_final_mse >= trained.encoder_initial_mse / 10.0)
        fail = "encoder MSE did not improve 10x";

    const ModelBundle bundle = load_bundle(cfg.bundle_path());
    const FactorSet factors = load_factorset(cfg.factorset_path());
    const SinusoidalParams params = load_params(cfg.params_path());

    // held-out identities = those absent from the training tensor
    const DatasetFile df = load_dataset(cfg.dataset_path());
    auto [train_set, test_set] = split_dataset(df.dataset, cfg.train_fraction, cfg.seed);
    std::vector<int> held_out;
    {
        std::vector<bool> seen(cfg.identities, false);
        for (const auto& s : test_set.samples)
            if (!seen[static_cast<std::size_t>(s.identity)]) {
                seen[static_cast<std::size_t>(s.identity)] = true;
                held_out.push_back(s.identity);
            }
    }
    const auto shapes = make_identity_shapes(cfg.identities, cfg.landmarks, cfg.variation, cfg.seed);

    // 500 uniformly random off-grid poses on held-out identities
    Rng rng(4242);
    const std::size_t n_test = 500;
    std::vector<EulerPose> preds(n_test), gts(n_test);
    std::vector<std::vector<double>> feats(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        const int id = held_out[i % held_out.size()];
        const EulerPose pose{rng.uniform(-50, 50), rng.uniform(-40, 40), rng.uniform(-30, 30)};
        feats[i] = pose_features(shapes[static_cast<std::size_t>(id)], pose);
        const PoseEstimate est = predict_fast(bundle, feats[i]);
        preds[i] = est.pose;
        gts[i] = pose;
    }

    const MaeReport mae_r = mae(preds, gts);
    const MaevReport maev_r = maev(preds, gts);
    detail << "MAE y/p/r " << mae_r.yaw << "/" << mae_r.pitch << "/" << mae_r.roll
           << ", MAEV " << maev_r.mean;
    if (mae_r.yaw > 5.0 || mae_r.pitch > 5.0 || mae_r.roll > 5.0)
        fail = "fast-path MAE above 5 degrees";
    if (fail.empty() && maev_r.mean > 7.0) fail = "MAEV above 7 degrees";

    // oracle agreement on a 50-sample subset
    if (fail.empty()) {
        std::vector<EulerPose> oracle_preds(50), fast_sub(50);
        for (std::size_t i = 0; i < 50; ++i) {
            const PoseEstimate est =
                predict_oracle(factors, params, feats[i], cfg.oracle, bundle.ranges);
            oracle_preds[i] = est.pose;
            fast_sub[i] = preds[i];
        }
        const MaeReport gap = mae(fast_sub, oracle_preds);
        detail << ", fast-vs-oracle " << gap.mean;
        if (gap.mean > 2.0) fail = "fast-vs-oracle gap " + std::to_string(gap.mean);
    }

    const double secs = elapsed_s(t0);
    if (fail.empty() && secs >= 600.0) fail = "runtime " + std::to_string(secs) + " s";
    detail << ", " << secs << " s";
    criterion(5, "end-to-end desk-scale estimation", fail.empty(),
              fail.empty() ? detail.str() : fail);
}

void criterion_6_gradients() {
    std::string fail;
    Rng rng(1006);

    const Activation acts[][2] = {{Activation::ReLU, Activation::Identity},
                                  {Activation::Tanh, Activation::Identity},
                                  {Activation::ReLU, Activation::Tanh},
                                  {Activation::Identity, Activation::ReLU}};
    double worst = 0.0;
    for (const auto& pair : acts) {
        DenseNet net;
        net.role = NetRole::Encoder;
        const std::size_t widths[] = {6, 5, 3};
        for (int li = 0; li < 2; ++li) {
            Layer l;
            l.in = widths[li];
            l.out = widths[li + 1];
            l.activation = pair[li];
            l.weights.resize(l.in * l.out);
            l.bias.resize(l.out);
            for (auto& w : l.weights) w = rng.uniform(-0.9, 0.9);
            for (auto& b : l.bias) b = rng.uniform(-0.2, 0.2);
            net.layers.push_back(std::move(l));
        }
        const Matrix x = random_matrix(7, 6, rng);
        const Matrix y = random_matrix(7, 3, rng);

        Gradients g;
        loss_and_gradient(net, x, y, g);

        auto loss_only = [&]() {
            double loss = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                const auto out = forward(net, std::span<const double>(x.row(r), x.cols()));
                for (std::size_t c = 0; c < y.cols(); ++c) {
                    const double d = out[c] - y(r, c);
                    loss += d * d;
                }
            }
            return loss / static_cast<double>(x.rows() * y.cols());
        };

        const double h = 1e-4;
        for (std::size_t li = 0; li < net.layers.size() && fail.empty(); ++li) {
            auto check = [&](double& p, double analytic) {
                const double saved = p;
                p = saved + h;
                const double up = loss_only();
                p = saved - h;
                const double dn = loss_only();
                p = saved;
                const double numeric = (up - dn) / (2 * h);
                const double rel = std::fabs(analytic - numeric) /
                                   std::max(1.0, std::max(std::fabs(analytic), std::fabs(numeric)));
                worst = std::max(worst, rel);
                if (rel >= 1e-5) fail = "gradient relative error " + std::to_string(rel);
            };
            for (std::size_t i = 0; i < net.layers[li].weights.size() && fail.empty(); ++i)
                check(net.layers[li].weights[i], g.weights[li][i]);
            for (std::size_t i = 0; i < net.layers[li].bias.size() && fail.empty(); ++i)
                check(net.layers[li].bias[i], g.bias[li][i]);
        }
        if (!fail.empty()) break;
    }
    std::ostringstream d;
    d << "worst relative error " << worst;
    criterion(6, "backprop gradient correctness", fail.empty(), fail.empty() ? d.str() : fail);
}

void criterion_7_realtime() {
    std::string fail;

    ModelBundle bundle;
    bundle.encoder = build_encoder(1404, 42);
    bundle.head_yaw = build_head(NetRole::HeadYaw, 42);
    bundle.head_pitch = build_head(NetRole::HeadPitch, 42);
    bundle.head_roll = build_head(NetRole::HeadRoll, 42);
    bundle.ranges = {std::pair{-50.0, 50.0}, std::pair{-40.0, 40.0}, std::pair{-30.0, 30.0}};

    Rng rng(1007);
    Matrix samples(64, 1404);
    for (std::size_t i = 0; i < samples.size(); ++i) samples.data()[i] = rng.uniform(-1, 1);

    const TimingStats t = benchmark_tpf(bundle, samples, 16);  // 1024 frames
    if (t.frames < 1000) fail = "too few frames";
    if (fail.empty() && t.median_seconds >= 0.010)
        fail = "median TPF " + std::to_string(t.median_seconds * 1e3) + " ms";

    std::ostringstream d;
    d << t.frames << " frames, median " << t.median_seconds * 1e3 << " ms, p95 "
      << t.p95_seconds * 1e3 << " ms";
    criterion(7, "real-time bound at feature dim 1404", fail.empty(),
              fail.empty() ? d.str() : fail);
}

void criterion_8_metric_identities() {
    std::string fail;

    Rng rng(1008);
    std::vector<EulerPose> poses(64);
    for (auto& p : poses)
        p = {rng.uniform(-50, 50), rng.uniform(-40, 40), rng.uniform(-30, 30)};
    const MaevReport self = maev(poses, poses);
    if (self.mean != 0.0 || self.left != 0.0) fail = "MAEV(p, p) != 0";

    if (fail.empty()) {
        const std::vector<EulerPose> pred = {{10, 0, 0}};
        const std::vector<EulerPose> gt = {{0, 0, 0}};
        const MaevReport r = maev(pred, gt);
        if (std::fabs(r.mean - 20.0 / 3.0) > 1e-12)
            fail = "single-axis MAEV " + std::to_string(r.mean);
    }

    if (fail.empty()) {
        std::vector<EulerPose> preds(300), gts(300);
        for (std::size_t i = 0; i < 300; ++i) {
            gts[i] = {rng.uniform(-50, 50), rng.uniform(-40, 40), rng.uniform(-30, 30)};
            preds[i] = {gts[i].yaw + rng.uniform(-4, 4), gts[i].pitch + rng.uniform(-4, 4),
                        gts[i].roll + rng.uniform(-4, 4)};
        }
        for (int a = 0; a < 3 && fail.empty(); ++a) {
            const auto axis = static_cast<Axis>(a);
            const double lo = axis == Axis::Yaw ? -50 : (axis == Axis::Pitch ? -40 : -30);
            const IntervalTable table = interval_errors(preds, gts, axis, 6, lo, -lo);
            double weighted = 0.0;
            std::size_t count = 0;
            for (const auto& b : table.bins) {
                if (b.has_mae) weighted += b.mae * static_cast<double>(b.count);
                count += b.count;
            }
            const MaeReport global = mae(preds, gts);
            const double global_axis =
                axis == Axis::Yaw ? global.yaw : (axis == Axis::Pitch ? global.pitch : global.roll);
            if (count != 300 ||
                std::fabs(weighted / static_cast<double>(count) - global_axis) > 1e-12)
                fail = "interval aggregation mismatch on " + std::string(axis_name(axis));
        }
    }

    criterion(8, "metric identities", fail.empty(),
              fail.empty() ? "MAEV zero/analytic + interval aggregation at 1e-12" : fail);
}

void criterion_9_determinism() {
    std::string fail;

    RunConfig base;
    base.seed = 7;
    base.identities = 6;
    base.landmarks = 12;
    base.variation = 0.05;
    base.yaw_range = {-50, 50, 25};
    base.pitch_range = {-40, 40, 20};
    base.roll_range = {-30, 30, 15};
    base.train_fraction = 0.5;
    base.fine_step = 0.5;
    base.encoder_train.epochs = 2;
    base.head_train.epochs = 2;

    std::array<fs::path, 2> dirs = {scratch_dir("det_a"), scratch_dir("det_b")};
    for (const auto& dir : dirs) {
        RunConfig cfg = base;
        cfg.out_dir = dir;
        std::ostringstream log;
        cmd_generate(cfg, log);
        cmd_decompose(cfg, log);
        cmd_fit(cfg, log);
        cmd_train(cfg, log);
    }

    for (const char* name : {"dataset.txt", "tensor.nlml", "factorset.nlml", "params.txt",
                             "bundle.txt", "loss.txt"}) {
        if (read_bytes(dirs[0] / name) != read_bytes(dirs[1] / name)) {
            fail = std::string(name) + " differs between runs";
            break;
        }
        if (read_bytes(dirs[0] / name).empty()) {
            fail = std::string(name) + " is empty";
            break;
        }
    }

    criterion(9, "pipeline determinism", fail.empty(),
              fail.empty() ? "two runs byte-identical across all artifacts" : fail);
}

}  // namespace

int main() {
    try {
        criterion_1_multilinear();
    } catch (const std::exception& e) {
        criterion(1, "multilinear correctness", false, e.what());
    }
    try {
        criterion_2_normalization();
    } catch (const std::exception& e) {
        criterion(2, "landmark normalization", false, e.what());
    }
    try {
        criterion_3_cosine_recovery();
    } catch (const std::exception& e) {
        criterion(3, "cosine-fit recovery", false, e.what());
    }
    try {
        criterion_4_energy();
    } catch (const std::exception& e) {
        criterion(4, "rotation-mode energy concentration", false, e.what());
    }
    try {
        criterion_5_end_to_end();
    } catch (const std::exception& e) {
        criterion(5, "end-to-end desk-scale estimation", false, e.what());
    }
    try {
        criterion_6_gradients();
    } catch (const std::exception& e) {
        criterion(6, "backprop gradient correctness", false, e.what());
    }
    try {
        criterion_7_realtime();
    } catch (const std::exception& e) {
        criterion(7, "real-time bound at feature dim 1404", false, e.what());
    }
    try {
        criterion_8_metric_identities();
    } catch (const std::exception& e) {
        criterion(8, "metric identities", false, e.what());
    }
    try {
        criterion_9_determinism();
    } catch (const std::exception& e) {
        criterion(9, "pipeline determinism", false, e.what());
    }

    std::printf("%d of 9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
