// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nlml/errors.hpp"
#include "nlml/io.hpp"
#include "nlml/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> oracle_sample;
    std::optional<std::string> ranks;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file (default: $NLML_CONFIG)");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--threads", flags.threads, "worker thread cap (0 = all cores)");
    cmd->add_option("--out", flags.out_dir, "artifact output directory");
    cmd->add_option("--oracle-sample", flags.oracle_sample,
                    "run the reconstruction oracle on this many eval samples");
    cmd->add_option("--ranks", flags.ranks,
                    "truncation ranks id,y,p,r,f (0 = full rank)");
}

nlml::RunConfig resolve_config(const CommonFlags& flags) {
    std::string path = flags.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("NLML_CONFIG")) path = env;
    }
    nlml::RunConfig cfg;
    if (!path.empty()) cfg = nlml::load_config(path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.oracle_sample) cfg.oracle_sample = *flags.oracle_sample;
    if (flags.ranks) {
        std::array<std::size_t, 5> ranks{};
        if (std::sscanf(flags.ranks->c_str(), "%zu,%zu,%zu,%zu,%zu", &ranks[0], &ranks[1],
                        &ranks[2], &ranks[3], &ranks[4]) != 5)
            throw nlml::UsageError("--ranks expects five comma-separated integers");
        cfg.ranks = ranks;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pose-manifold toolkit: tensor decomposition + cosine manifolds + "
                 "encoder/head regression for yaw/pitch/roll estimation"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string predict_input = "-";
    std::string eval_external;
    bool print_default_config = false;

    auto* generate = app.add_subcommand("generate", "generate a pose-consistent dataset");
    add_common(generate, flags);
    auto* decompose =
        app.add_subcommand("decompose", "populate the training tensor and run the HOSVD");
    add_common(decompose, flags);
    auto* fit = app.add_subcommand("fit", "fit cosine curves to the rotation factors");
    add_common(fit, flags);
    auto* train = app.add_subcommand("train", "train the encoder and the three heads");
    add_common(train, flags);
    auto* eval = app.add_subcommand("eval", "evaluate on the held-out split");
    add_common(eval, flags);
    eval->add_option("--input", eval_external,
                     "external dataset-format landmark file (instead of the held-out split)");
    auto* predict = app.add_subcommand("predict", "predict dataset-format records to stdout");
    add_common(predict, flags);
    predict->add_option("--input", predict_input, "records file, or - for stdin");
    auto* bench = app.add_subcommand("bench", "fast-path latency benchmark (single-threaded)");
    add_common(bench, flags);
    auto* config_cmd = app.add_subcommand("config", "print the default config as JSON");
    config_cmd->add_flag("--defaults", print_default_config, "print defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (config_cmd->parsed()) {
            std::cout << nlml::default_config_json();
            return 0;
        }
        const nlml::RunConfig cfg = resolve_config(flags);
        if (generate->parsed()) {
            nlml::cmd_generate(cfg, std::cout);
        } else if (decompose->parsed()) {
            nlml::cmd_decompose(cfg, std::cout);
        } else if (fit->parsed()) {
            nlml::cmd_fit(cfg, std::cout);
        } else if (train->parsed()) {
            nlml::cmd_train(cfg, std::cout);
        } else if (eval->parsed()) {
            std::optional<std::filesystem::path> external;
            if (!eval_external.empty()) external = eval_external;
            nlml::cmd_eval(cfg, std::cout, external);
        } else if (predict->parsed()) {
            nlml::cmd_predict(cfg, predict_input, std::cout);
        } else if (bench->parsed()) {
            nlml::cmd_bench(cfg, std::cout);
        }
    } catch (const nlml::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlml::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlml::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
