// SPDX-License-Identifier: Apache-2.0

#include "nlml/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "nlml/errors.hpp"

namespace nlml {

using nlohmann::json;

PoseGrid RunConfig::grid() const {
    return PoseGrid::uniform(yaw_range[0], yaw_range[1], yaw_range[2], pitch_range[0],
                             pitch_range[1], pitch_range[2], roll_range[0], roll_range[1],
                             roll_range[2]);
}

std::array<std::pair<double, double>, 3> RunConfig::trained_ranges() const {
    return {std::pair{yaw_range[0], yaw_range[1]}, std::pair{pitch_range[0], pitch_range[1]},
            std::pair{roll_range[0], roll_range[1]}};
}

void RunConfig::validate() const {
    for (const auto* r : {&yaw_range, &pitch_range, &roll_range}) {
        if (std::fabs((*r)[0] + (*r)[1]) > 1e-9)
            throw UsageError("config: angle ranges must be symmetric about 0");
        if (!((*r)[2] > 0.0)) throw UsageError("config: angle step must be positive");
    }
    if (identities < 1) throw UsageError("config: need at least one identity");
    if (landmarks < 4) throw UsageError("config: need at least 4 landmarks");
    if (variation < 0.0) throw UsageError("config: variation must be >= 0");
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw UsageError("config: train_fraction must be in (0, 1)");
    if (!(fine_step > 0.0)) throw UsageError("config: fine_step must be positive");

    std::set<std::string> names;
    for (const std::string& n : {dataset_file, tensor_file, factorset_file, params_file,
                                 bundle_file, loss_file, report_file, predictions_file}) {
        if (n.empty()) throw UsageError("config: empty artifact file name");
        if (!names.insert(n).second) throw UsageError("config: artifact paths must be distinct: " + n);
    }
    grid();  // validates step/range divisibility
}

namespace {

void read_range(const json& j, const char* key, std::array<double, 3>& out) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 3)
        throw UsageError(std::string("config: ") + key + " must be [lo, hi, step]");
    for (int i = 0; i < 3; ++i) out[i] = arr[i].get<double>();
}

void read_train(const json& j, TrainConfig& cfg) {
    static const std::set<std::string> known{"learning_rate", "batch", "epochs"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw UsageError("config: unknown training key " + k);
        (void)v;
    }
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch")) cfg.batch_size = j.at("batch").get<std::size_t>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config: " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw UsageError("config parse error: " + std::string(e.what()));
    }

    RunConfig cfg;
    static const std::set<std::string> known{"seed",   "threads", "dataset", "ranks",
                                             "fine_step", "train", "oracle",  "bench",
                                             "paths"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw UsageError("config: unknown key " + k);
        (void)v;
    }

    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
    if (j.contains("fine_step")) cfg.fine_step = j.at("fine_step").get<double>();

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        static const std::set<std::string> dk{"identities", "landmarks", "variation",
                                              "yaw", "pitch", "roll"};
        for (const auto& [k, v] : d.items()) {
            if (!dk.count(k)) throw UsageError("config: unknown dataset key " + k);
            (void)v;
        }
        if (d.contains("identities")) cfg.identities = d.at("identities").get<std::size_t>();
        if (d.contains("landmarks")) cfg.landmarks = d.at("landmarks").get<std::size_t>();
        if (d.contains("variation")) cfg.variation = d.at("variation").get<double>();
        read_range(d, "yaw", cfg.yaw_range);
        read_range(d, "pitch", cfg.pitch_range);
        read_range(d, "roll", cfg.roll_range);
    }

    if (j.contains("ranks")) {
        const auto& r = j.at("ranks");
        static const char* keys[5] = {"identity", "yaw", "pitch", "roll", "feature"};
        for (const auto& [k, v] : r.items()) {
            bool ok = false;
            for (const char* key : keys) ok = ok || k == key;
            if (!ok) throw UsageError("config: unknown ranks key " + k);
            (void)v;
        }
        for (int i = 0; i < 5; ++i)
            if (r.contains(keys[i])) cfg.ranks[i] = r.at(keys[i]).get<std::size_t>();
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        static const std::set<std::string> tk{"fraction", "smoothed_targets", "encoder", "heads"};
        for (const auto& [k, v] : t.items()) {
            if (!tk.count(k)) throw UsageError("config: unknown train key " + k);
            (void)v;
        }
        if (t.contains("fraction")) cfg.train_fraction = t.at("fraction").get<double>();
        if (t.contains("smoothed_targets"))
            cfg.smoothed_targets = t.at("smoothed_targets").get<bool>();
        if (t.contains("encoder")) read_train(t.at("encoder"), cfg.encoder_train);
        if (t.contains("heads")) read_train(t.at("heads"), cfg.head_train);
    }

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        static const std::set<std::string> ok{"coarse_step", "refine_tol", "max_outer", "sample"};
        for (const auto& [k, v] : o.items()) {
            if (!ok.count(k)) throw UsageError("config: unknown oracle key " + k);
            (void)v;
        }
        if (o.contains("coarse_step")) cfg.oracle.coarse_step = o.at("coarse_step").get<double>();
        if (o.contains("refine_tol")) cfg.oracle.refine_tol = o.at("refine_tol").get<double>();
        if (o.contains("max_outer")) cfg.oracle.max_outer = o.at("max_outer").get<std::size_t>();
        if (o.contains("sample")) cfg.oracle_sample = o.at("sample").get<std::size_t>();
    }

    if (j.contains("bench")) {
        const auto& b = j.at("bench");
        static const std::set<std::string> bk{"feature_dim", "frames"};
        for (const auto& [k, v] : b.items()) {
            if (!bk.count(k)) throw UsageError("config: unknown bench key " + k);
            (void)v;
        }
        if (b.contains("feature_dim"))
            cfg.bench_feature_dim = b.at("feature_dim").get<std::size_t>();
        if (b.contains("frames")) cfg.bench_frames = b.at("frames").get<std::size_t>();
    }

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        static const std::set<std::string> pk{"out_dir",  "dataset", "tensor",      "factorset",
                                              "factorset_text", "params",  "bundle",      "loss",
                                              "report",   "predictions", "interval_prefix"};
        for (const auto& [k, v] : p.items()) {
            if (!pk.count(k)) throw UsageError("config: unknown paths key " + k);
            (void)v;
        }
        if (p.contains("out_dir")) cfg.out_dir = p.at("out_dir").get<std::string>();
        if (p.contains("dataset")) cfg.dataset_file = p.at("dataset").get<std::string>();
        if (p.contains("tensor")) cfg.tensor_file = p.at("tensor").get<std::string>();
        if (p.contains("factorset")) cfg.factorset_file = p.at("factorset").get<std::string>();
        if (p.contains("factorset_text"))
            cfg.factorset_text_file = p.at("factorset_text").get<std::string>();
        if (p.contains("params")) cfg.params_file = p.at("params").get<std::string>();
        if (p.contains("bundle")) cfg.bundle_file = p.at("bundle").get<std::string>();
        if (p.contains("loss")) cfg.loss_file = p.at("loss").get<std::string>();
        if (p.contains("report")) cfg.report_file = p.at("report").get<std::string>();
        if (p.contains("predictions"))
            cfg.predictions_file = p.at("predictions").get<std::string>();
        if (p.contains("interval_prefix"))
            cfg.interval_prefix = p.at("interval_prefix").get<std::string>();
    }

    cfg.validate();
    return cfg;
}

std::string default_config_json() {
    const RunConfig c;
    json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["dataset"] = {{"identities", c.identities}, {"landmarks", c.landmarks},
                    {"variation", c.variation},   {"yaw", c.yaw_range},
                    {"pitch", c.pitch_range},     {"roll", c.roll_range}};
    j["ranks"] = {{"identity", c.ranks[0]}, {"yaw", c.ranks[1]},    {"pitch", c.ranks[2]},
                  {"roll", c.ranks[3]},     {"feature", c.ranks[4]}};
    j["fine_step"] = c.fine_step;
    j["train"] = {{"fraction", c.train_fraction},
                  {"smoothed_targets", c.smoothed_targets},
                  {"encoder",
                   {{"learning_rate", c.encoder_train.learning_rate},
                    {"batch", c.encoder_train.batch_size},
                    {"epochs", c.encoder_train.epochs}}},
                  {"heads",
                   {{"learning_rate", c.head_train.learning_rate},
                    {"batch", c.head_train.batch_size},
                    {"epochs", c.head_train.epochs}}}};
    j["oracle"] = {{"coarse_step", c.oracle.coarse_step},
                   {"refine_tol", c.oracle.refine_tol},
                   {"max_outer", c.oracle.max_outer},
                   {"sample", c.oracle_sample}};
    j["bench"] = {{"feature_dim", c.bench_feature_dim}, {"frames", c.bench_frames}};
    j["paths"] = {{"out_dir", c.out_dir.string()},
                  {"dataset", c.dataset_file},
                  {"tensor", c.tensor_file},
                  {"factorset", c.factorset_file},
                  {"params", c.params_file},
                  {"bundle", c.bundle_file},
                  {"loss", c.loss_file},
                  {"report", c.report_file},
                  {"predictions", c.predictions_file},
                  {"interval_prefix", c.interval_prefix}};
    return j.dump(2) + "\n";
}

}  // namespace nlml
