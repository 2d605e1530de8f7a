// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "nlml/dense_net.hpp"
#include "nlml/estimator.hpp"

namespace nlml {

/// Every knob of the pipeline, with defaults matching the standard
/// experiment: 20 identities, 30 landmarks, 10-degree grid over
/// yaw [-50,50] / pitch [-40,40] / roll [-30,30], rotation ranks 3,
/// 0.01-degree fine tables, 70/30 identity split.
struct RunConfig {
    std::uint64_t seed = 42;
    unsigned threads = 0;  // 0 = all cores

    // dataset
    std::size_t identities = 20;
    std::size_t landmarks = 30;
    double variation = 0.05;
    std::array<double, 3> yaw_range{-50.0, 50.0, 10.0};    // lo, hi, step
    std::array<double, 3> pitch_range{-40.0, 40.0, 10.0};
    std::array<double, 3> roll_range{-30.0, 30.0, 10.0};

    // decomposition: 0 = full rank
    std::array<std::size_t, 5> ranks{0, 3, 3, 3, 0};

    // manifold fitting / fine tables
    double fine_step = 0.01;

    // training
    double train_fraction = 0.7;
    bool smoothed_targets = false;
    TrainConfig encoder_train;  // lr 1e-3, batch 64, 200 epochs
    // heads regress degrees in [-50, 50]; they need the larger step size to
    // cover that output scale within a reasonable epoch budget
    TrainConfig head_train{1e-2, 64, 60, 0, 0.9, 0.999, 1e-8};

    // oracle cross-check
    OracleConfig oracle;
    std::size_t oracle_sample = 0;  // 0 = skip oracle during eval

    // bench
    std::size_t bench_feature_dim = 1404;
    std::size_t bench_frames = 1000;

    // artifacts
    std::filesystem::path out_dir = "artifacts";
    std::string dataset_file = "dataset.txt";
    std::string tensor_file = "tensor.nlml";
    std::string factorset_file = "factorset.nlml";
    std::string factorset_text_file;  // optional debug export, empty = skip
    std::string params_file = "params.txt";
    std::string bundle_file = "bundle.txt";
    std::string loss_file = "loss.txt";
    std::string report_file = "report.txt";
    std::string predictions_file = "predictions.txt";
    std::string interval_prefix = "intervals";  // intervals_yaw.txt etc.

    std::filesystem::path dataset_path() const { return out_dir / dataset_file; }
    std::filesystem::path tensor_path() const { return out_dir / tensor_file; }
    std::filesystem::path factorset_path() const { return out_dir / factorset_file; }
    std::filesystem::path params_path() const { return out_dir / params_file; }
    std::filesystem::path bundle_path() const { return out_dir / bundle_file; }
    std::filesystem::path loss_path() const { return out_dir / loss_file; }
    std::filesystem::path report_path() const { return out_dir / report_file; }
    std::filesystem::path predictions_path() const { return out_dir / predictions_file; }

    PoseGrid grid() const;
    std::array<std::pair<double, double>, 3> trained_ranges() const;

    /// Symmetric ranges, positive steps/counts, distinct artifact paths.
    void validate() const;
};

/// Parses a JSON config file over the defaults; unknown keys are an error.
RunConfig load_config(const std::filesystem::path& path);

/// The default config serialized as JSON (documentation + starting point).
std::string default_config_json();

}  // namespace nlml
