// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "nlml/config.hpp"
#include "nlml/evalkit.hpp"

namespace nlml {

// The pipeline commands behind the CLI subcommands. Each one reads and
// writes only the artifacts named in the config, prints a short summary to
// `out`, and is byte-deterministic given identical config and inputs.

struct GenerateOutcome {
    std::size_t samples = 0;
    std::size_t feature_dim = 0;
};

struct DecomposeOutcome {
    std::array<double, 3> rotation_energy_3{};  // leading-3 ratio per axis
    double reconstruction_error = 0.0;          // relative Frobenius
};

struct TrainOutcome {
    double encoder_initial_mse = 0.0;
    double encoder_final_mse = 0.0;
    std::array<double, 3> head_final_mse{};
};

struct EvalOutcome {
    MetricReport report;
    std::array<IntervalTable, 3> intervals;
    /// Fast-vs-oracle agreement, present when an oracle subsample ran.
    std::optional<MaeReport> oracle_gap;
    std::optional<MaeReport> oracle_mae;
};

GenerateOutcome cmd_generate(const RunConfig& cfg, std::ostream& out);
DecomposeOutcome cmd_decompose(const RunConfig& cfg, std::ostream& out);
void cmd_fit(const RunConfig& cfg, std::ostream& out);
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out);
EvalOutcome cmd_eval(const RunConfig& cfg, std::ostream& out,
                     const std::optional<std::filesystem::path>& external_dataset = {});
/// Predicts the records of `input` ("-" = stdin) and writes one line per
/// record to `out`.
void cmd_predict(const RunConfig& cfg, const std::string& input, std::ostream& out);
TimingStats cmd_bench(const RunConfig& cfg, std::ostream& out);

}  // namespace nlml
