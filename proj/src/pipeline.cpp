// SPDX-License-Identifier: Apache-2.0

#include "nlml/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlml/errors.hpp"
#include "nlml/io.hpp"
#include "nlml/kernels.hpp"
#include "nlml/parallel.hpp"
#include "nlml/rng.hpp"

namespace nlml {

namespace {

std::ofstream open_artifact(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    return os;
}

Matrix features_matrix(const PoseDataset& d) {
    Matrix x(d.samples.size(), d.feature_dim());
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& f = d.samples[i].features;
        std::copy(f.begin(), f.end(), x.row(i));
    }
    return x;
}

std::vector<double> normalized_features(const PoseSample& s) {
    // Normalization is idempotent, so records that are already normalized
    // pass through unchanged and external raw landmarks get aligned.
    LandmarkSet shape;
    shape.points.resize(s.features.size() / 3);
    for (std::size_t i = 0; i < shape.points.size(); ++i)
        shape.points[i] = {s.features[3 * i], s.features[3 * i + 1], s.features[3 * i + 2]};
    const LandmarkSet n = normalize_landmarks(shape);
    std::vector<double> out;
    out.reserve(s.features.size());
    for (const auto& p : n.points) {
        out.push_back(p[0]);
        out.push_back(p[1]);
        out.push_back(p[2]);
    }
    return out;
}

SinusoidalParams fit_all_axes(const FactorSet& f, const PoseGrid& grid) {
    SinusoidalParams params;
    params.yaw = fit_axis(Axis::Yaw, f.factors[1], grid.yaw_bins);
    params.pitch = fit_axis(Axis::Pitch, f.factors[2], grid.pitch_bins);
    params.roll = fit_axis(Axis::Roll, f.factors[3], grid.roll_bins);
    return params;
}

}  // namespace

GenerateOutcome cmd_generate(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const auto shapes =
        make_identity_shapes(cfg.identities, cfg.landmarks, cfg.variation, cfg.seed);
    const PoseGrid grid = cfg.grid();
    const PoseDataset d = generate_dataset(shapes, grid);
    save_dataset(cfg.dataset_path(), d, grid, cfg.seed);

    GenerateOutcome o{d.samples.size(), d.feature_dim()};
    out << "generated " << o.samples << " samples (" << cfg.identities << " identities x "
        << grid.yaw_bins.size() << "x" << grid.pitch_bins.size() << "x" << grid.roll_bins.size()
        << " grid), feature dim " << o.feature_dim << "\n";
    out << "dataset -> " << cfg.dataset_path().string() << "\n";
    return o;
}

DecomposeOutcome cmd_decompose(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const DatasetFile df = load_dataset(cfg.dataset_path());

    // The decomposition runs on the training identities so the factor set
    // matches what the encoder is later trained against; eval keeps the
    // held-out identities untouched.
    auto [train_set, test_set] = split_dataset(df.dataset, cfg.train_fraction, cfg.seed);
    (void)test_set;
    auto [tensor, ids] = populate_tensor(train_set, df.grid);
    std::filesystem::create_directories(cfg.out_dir);
    save_tensor(cfg.tensor_path(), tensor);

    const FactorSet f = hosvd(tensor, cfg.ranks);
    save_factorset(cfg.factorset_path(), f);
    if (!cfg.factorset_text_file.empty()) {
        auto os = open_artifact(cfg.out_dir / cfg.factorset_text_file);
        save_factorset_text(os, f);
    }

    DecomposeOutcome o;
    const Tensor recon = reconstruct(f);
    double diff = 0.0;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
        const double d2 = tensor.data()[i] - recon.data()[i];
        diff += d2 * d2;
    }
    const double norm = tensor.frobenius_norm();
    o.reconstruction_error = norm > 0 ? std::sqrt(diff) / norm : 0.0;

    out << "tensor dims:";
    for (std::size_t d : tensor.dims()) out << " " << d;
    out << "  (training identities: " << ids.size() << ")\n";
    out << "leading-3 energy per rotation mode:\n";
    for (int a = 0; a < 3; ++a) {
        const auto& spec = f.spectra[a + 1];
        const std::size_t k = std::min<std::size_t>(3, spec.singular_values.size());
        o.rotation_energy_3[a] = energy_ratio(spec, k);
        out << "  " << axis_name(static_cast<Axis>(a)) << ": " << o.rotation_energy_3[a] << "\n";
    }
    out << "reconstruction relative error: " << o.reconstruction_error << "\n";
    out << "factorset -> " << cfg.factorset_path().string() << "\n";
    return o;
}

void cmd_fit(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const FactorSet f = load_factorset(cfg.factorset_path());
    const PoseGrid grid = cfg.grid();
    const SinusoidalParams params = fit_all_axes(f, grid);
    save_params(cfg.params_path(), params);

    for (Axis axis : {Axis::Yaw, Axis::Pitch, Axis::Roll}) {
        const AxisCurves& c = params.axis(axis);
        out << axis_name(axis) << ":";
        for (const auto& fit : c.dims) {
            out << " rms=" << fit.residual_rms << (fit.params.degenerate ? "(deg)" : "")
                << (fit.converged ? "" : "(!)");
        }
        out << "\n";
    }
    out << "params -> " << cfg.params_path().string() << "\n";
}

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const DatasetFile df = load_dataset(cfg.dataset_path());
    const FactorSet f = load_factorset(cfg.factorset_path());
    const SinusoidalParams params = load_params(cfg.params_path());

    auto [train_set, test_set] = split_dataset(df.dataset, cfg.train_fraction, cfg.seed);
    (void)test_set;
    if (f.factors[1].rows() != df.grid.yaw_bins.size() ||
        f.factors[2].rows() != df.grid.pitch_bins.size() ||
        f.factors[3].rows() != df.grid.roll_bins.size())
        throw DataError("train: factor set does not match the dataset grid");

    const Matrix inputs = features_matrix(train_set);
    const Matrix targets = cfg.smoothed_targets
                               ? encoder_targets_smoothed(params, train_set, df.grid)
                               : encoder_targets(f, train_set, df.grid);

    DenseNet encoder = build_encoder(train_set.feature_dim(), cfg.seed);
    TrainConfig enc_cfg = cfg.encoder_train;
    enc_cfg.seed = cfg.seed;

    TrainOutcome o;
    TrainResult enc_result;
    if (enc_cfg.epochs == 0) {
        out << "warning: encoder epochs = 0, writing an untrained bundle\n";
    } else {
        enc_result = train(encoder, inputs, targets, enc_cfg);
        o.encoder_initial_mse = enc_result.loss_history.front();
        o.encoder_final_mse = enc_result.loss_history.back();
    }

    ModelBundle bundle;
    bundle.encoder = std::move(encoder);
    bundle.ranges = cfg.trained_ranges();

    std::array<std::vector<double>, 3> head_losses;
    for (int a = 0; a < 3; ++a) {
        const auto axis = static_cast<Axis>(a);
        const auto [lo, hi] = bundle.ranges[a];
        const FineFactorTable table = gen_fine_factors(params.axis(axis), lo, hi, cfg.fine_step);
        auto [head_inputs, head_targets] = head_training_set(table);
        Matrix ty(head_targets.size(), 1);
        for (std::size_t i = 0; i < head_targets.size(); ++i) ty(i, 0) = head_targets[i];

        const NetRole role =
            a == 0 ? NetRole::HeadYaw : (a == 1 ? NetRole::HeadPitch : NetRole::HeadRoll);
        DenseNet head = build_head(role, cfg.seed);
        TrainConfig head_cfg = cfg.head_train;
        head_cfg.seed = cfg.seed + 1 + static_cast<std::uint64_t>(a);
        if (head_cfg.epochs == 0) {
            out << "warning: head epochs = 0, " << role_name(role) << " left untrained\n";
        } else {
            const TrainResult r = train(head, head_inputs, ty, head_cfg);
            head_losses[a] = r.loss_history;
            o.head_final_mse[a] = r.loss_history.back();
        }
        if (role == NetRole::HeadYaw) bundle.head_yaw = std::move(head);
        else if (role == NetRole::HeadPitch) bundle.head_pitch = std::move(head);
        else bundle.head_roll = std::move(head);
    }

    save_bundle(cfg.bundle_path(), bundle);
    {
        auto os = open_artifact(cfg.loss_path());
        os << "#nlml-loss v" << kFormatVersion << "\n";
        os << "encoder";
        for (double l : enc_result.loss_history) os << " " << format_double(l);
        os << "\n";
        for (int a = 0; a < 3; ++a) {
            os << "head_" << axis_name(static_cast<Axis>(a));
            for (double l : head_losses[a]) os << " " << format_double(l);
            os << "\n";
        }
    }

    out << "training samples: " << train_set.samples.size() << "\n";
    out << "encoder mse: " << o.encoder_initial_mse << " -> " << o.encoder_final_mse << "\n";
    out << "head mse (yaw/pitch/roll): " << o.head_final_mse[0] << " / " << o.head_final_mse[1]
        << " / " << o.head_final_mse[2] << "\n";
    out << "bundle -> " << cfg.bundle_path().string() << "\n";
    return o;
}

EvalOutcome cmd_eval(const RunConfig& cfg, std::ostream& out,
                     const std::optional<std::filesystem::path>& external_dataset) {
    cfg.validate();
    const ModelBundle bundle = load_bundle(cfg.bundle_path());

    PoseDataset eval_set;
    if (external_dataset) {
        eval_set = load_dataset(*external_dataset).dataset;
    } else {
        const DatasetFile df = load_dataset(cfg.dataset_path());
        auto [train_set, test_set] = split_dataset(df.dataset, cfg.train_fraction, cfg.seed);
        eval_set = std::move(test_set);
    }
    if (eval_set.feature_dim() != bundle.encoder.input_dim())
        throw DataError("eval: dataset feature dim does not match the bundle");

    const std::size_t n = eval_set.samples.size();
    std::vector<EulerPose> preds(n), gts(n);
    std::vector<double> elapsed(n);
    parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& s = eval_set.samples[i];
            const auto feats = normalized_features(s);
            const PoseEstimate est = predict_fast(bundle, feats);
            preds[i] = est.pose;
            gts[i] = s.pose;
            elapsed[i] = est.elapsed_seconds;
        }
    });

    EvalOutcome o;
    o.report.samples = n;
    o.report.mae = mae(preds, gts);
    o.report.maev = maev(preds, gts);
    o.report.timing = timing_from_samples(elapsed);

    for (int a = 0; a < 3; ++a) {
        const auto axis = static_cast<Axis>(a);
        const auto [lo, hi] = bundle.ranges[a];
        o.intervals[a] = interval_errors(preds, gts, axis, 6, lo, hi);
    }

    // oracle cross-check on an evenly spaced subsample
    if (cfg.oracle_sample > 0) {
        const FactorSet f = load_factorset(cfg.factorset_path());
        const SinusoidalParams params = load_params(cfg.params_path());
        const std::size_t m = std::min(cfg.oracle_sample, n);
        std::vector<EulerPose> oracle_preds(m), fast_sub(m), gt_sub(m);
        const std::size_t stride = n / m;
        parallel_for(m, cfg.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t i = k * stride;
                const auto feats = normalized_features(eval_set.samples[i]);
                const PoseEstimate est =
                    predict_oracle(f, params, feats, cfg.oracle, bundle.ranges);
                oracle_preds[k] = est.pose;
                fast_sub[k] = preds[i];
                gt_sub[k] = eval_set.samples[i].pose;
            }
        });
        o.oracle_gap = mae(fast_sub, oracle_preds);
        o.oracle_mae = mae(oracle_preds, gt_sub);
    }

    // artifacts: per-sample predictions, metric report, interval tables
    {
        auto os = open_artifact(cfg.predictions_path());
        os << "#nlml-predictions v" << kFormatVersion << "\n";
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = eval_set.samples[i];
            os << s.identity << " " << format_double(s.pose.yaw) << " "
               << format_double(s.pose.pitch) << " " << format_double(s.pose.roll) << " "
               << format_double(preds[i].yaw) << " " << format_double(preds[i].pitch) << " "
               << format_double(preds[i].roll) << " "
               << format_double(std::fabs(preds[i].yaw - s.pose.yaw)) << " "
               << format_double(std::fabs(preds[i].pitch - s.pose.pitch)) << " "
               << format_double(std::fabs(preds[i].roll - s.pose.roll)) << "\n";
        }
    }
    {
        auto os = open_artifact(cfg.report_path());
        os << "#nlml-report v" << kFormatVersion << "\n";
        os << "samples " << n << "\n";
        os << "mae yaw " << format_double(o.report.mae.yaw) << "\n";
        os << "mae pitch " << format_double(o.report.mae.pitch) << "\n";
        os << "mae roll " << format_double(o.report.mae.roll) << "\n";
        os << "mae mean " << format_double(o.report.mae.mean) << "\n";
        os << "maev left " << format_double(o.report.maev.left) << "\n";
        os << "maev down " << format_double(o.report.maev.down) << "\n";
        os << "maev front " << format_double(o.report.maev.front) << "\n";
        os << "maev mean " << format_double(o.report.maev.mean) << "\n";
        os << "tpf mean_s " << format_double(o.report.timing.mean_seconds) << "\n";
        os << "tpf median_s " << format_double(o.report.timing.median_seconds) << "\n";
        os << "tpf p95_s " << format_double(o.report.timing.p95_seconds) << "\n";
        if (o.oracle_gap) {
            os << "oracle_gap mean " << format_double(o.oracle_gap->mean) << "\n";
            os << "oracle_mae mean " << format_double(o.oracle_mae->mean) << "\n";
        }
    }
    for (int a = 0; a < 3; ++a) {
        const auto axis = static_cast<Axis>(a);
        auto os =
            open_artifact(cfg.out_dir / (cfg.interval_prefix + "_" + axis_name(axis) + ".txt"));
        os << "#nlml-intervals v" << kFormatVersion << " axis=" << axis_name(axis) << "\n";
        for (const auto& b : o.intervals[a].bins) {
            os << format_double(b.lo) << " " << format_double(b.hi) << " " << b.count << " "
               << (b.has_mae ? format_double(b.mae) : std::string("-")) << "\n";
        }
    }

    out << "samples: " << n << "\n";
    out << "MAE  yaw/pitch/roll/mean: " << o.report.mae.yaw << " / " << o.report.mae.pitch
        << " / " << o.report.mae.roll << " / " << o.report.mae.mean << "\n";
    out << "MAEV left/down/front/mean: " << o.report.maev.left << " / " << o.report.maev.down
        << " / " << o.report.maev.front << " / " << o.report.maev.mean << "\n";
    out << "TPF  median: " << o.report.timing.median_seconds * 1e3
        << " ms, mean: " << o.report.timing.mean_seconds * 1e3 << " ms\n";
    if (o.oracle_gap) {
        out << "oracle gap (fast vs oracle) MAE: " << o.oracle_gap->mean << "\n";
        out << "oracle MAE vs ground truth: " << o.oracle_mae->mean << "\n";
    }
    for (int a = 0; a < 3; ++a) {
        const auto axis = static_cast<Axis>(a);
        out << "\n" << axis_name(axis) << " intervals (gt-binned MAE):\n";
        char line[128];
        for (const auto& b : o.intervals[a].bins) {
            if (b.has_mae)
                std::snprintf(line, sizeof line, "  [%7.2f, %7.2f]  n=%-5zu mae=%.3f", b.lo,
                              b.hi, b.count, b.mae);
            else
                std::snprintf(line, sizeof line, "  [%7.2f, %7.2f]  n=%-5zu mae=-", b.lo, b.hi,
                              b.count);
            out << line << "\n";
        }
    }
    return o;
}

void cmd_predict(const RunConfig& cfg, const std::string& input, std::ostream& out) {
    cfg.validate();
    const ModelBundle bundle = load_bundle(cfg.bundle_path());

    DatasetFile df;
    if (input == "-") {
        // dataset-format stream on stdin, spooled to a temp file
        std::stringstream buf;
        buf << std::cin.rdbuf();
        const auto tmp = cfg.out_dir / ".predict_stdin.txt";
        std::filesystem::create_directories(cfg.out_dir);
        {
            auto os = open_artifact(tmp);
            os << buf.str();
        }
        df = load_dataset(tmp);
        std::filesystem::remove(tmp);
    } else {
        df = load_dataset(input);
    }

    for (const auto& s : df.dataset.samples) {
        const auto feats = normalized_features(s);
        const PoseEstimate est = predict_fast(bundle, feats);
        out << s.identity << " " << format_double(est.pose.yaw) << " "
            << format_double(est.pose.pitch) << " " << format_double(est.pose.roll)
            << (est.clamped ? " clamped" : "") << "\n";
    }
}

TimingStats cmd_bench(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    // A freshly initialized bundle has the same inference cost as a trained
    // one, so the benchmark does not require training artifacts.
    ModelBundle bundle;
    bundle.encoder = build_encoder(cfg.bench_feature_dim, cfg.seed);
    bundle.head_yaw = build_head(NetRole::HeadYaw, cfg.seed);
    bundle.head_pitch = build_head(NetRole::HeadPitch, cfg.seed);
    bundle.head_roll = build_head(NetRole::HeadRoll, cfg.seed);
    bundle.ranges = cfg.trained_ranges();

    const std::size_t n_samples = std::min<std::size_t>(cfg.bench_frames, 64);
    Rng rng(cfg.seed);
    Matrix samples(n_samples, cfg.bench_feature_dim);
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples.data()[i] = rng.uniform(-1.0, 1.0);

    const std::size_t repeats = (cfg.bench_frames + n_samples - 1) / n_samples;
    const TimingStats t = benchmark_tpf(bundle, samples, repeats);
    out << "frames: " << t.frames << " (feature dim " << cfg.bench_feature_dim << ")\n";
    out << "tpf median: " << t.median_seconds * 1e3 << " ms, mean: " << t.mean_seconds * 1e3
        << " ms, p95: " << t.p95_seconds * 1e3 << " ms\n";
    out << "kernel backend: " << kernels::backend_name() << "\n";
    return t;
}

}  // namespace nlml
