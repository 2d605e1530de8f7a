// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlml/errors.hpp"
#include "nlml/io.hpp"
#include "test_util.hpp"

using namespace nlml;
using namespace nlml_test;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "nlml_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("tensor binary container round trip, bitwise") {
    Rng rng(91);
    const Tensor t = random_tensor({3, 4, 2, 3, 5}, rng);
    const auto path = temp_dir() / "tensor.nlml";
    save_tensor(path, t);
    const Tensor back = load_tensor(path);
    CHECK(back == t);

    // header starts with the magic
    const std::string bytes = file_bytes(path);
    REQUIRE(bytes.size() > 12);
    CHECK(bytes.substr(0, 4) == "NLML");

    // deterministic writer
    const auto path2 = temp_dir() / "tensor2.nlml";
    save_tensor(path2, t);
    CHECK(file_bytes(path2) == bytes);
}

TEST_CASE("corrupt containers are rejected") {
    const auto path = temp_dir() / "corrupt.nlml";
    {
        std::ofstream os(path, std::ios::binary);
        os << "JUNKJUNKJUNK";
    }
    CHECK_THROWS_AS(load_tensor(path), DataError);
    CHECK_THROWS_AS(load_factorset(path), DataError);
    CHECK_THROWS_AS(load_tensor(temp_dir() / "missing.nlml"), DataError);

    // tensor container does not load as a factor set
    Rng rng(92);
    const auto tpath = temp_dir() / "kind.nlml";
    save_tensor(tpath, random_tensor({2, 2}, rng));
    CHECK_THROWS_AS(load_factorset(tpath), DataError);

    // truncated payload
    const std::string bytes = file_bytes(tpath);
    const auto trunc = temp_dir() / "trunc.nlml";
    {
        std::ofstream os(trunc, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    }
    CHECK_THROWS_AS(load_tensor(trunc), DataError);
}

TEST_CASE("factorset round trips through binary and text") {
    Rng rng(93);
    const Tensor t = random_tensor({3, 4, 3, 2, 5}, rng);
    const FactorSet f = hosvd(t, {kFullRank, 3, 2, 2, kFullRank});

    const auto path = temp_dir() / "factors.nlml";
    save_factorset(path, f);
    const FactorSet back = load_factorset(path);
    CHECK(back.core == f.core);
    CHECK(back.w == f.w);
    for (int m = 0; m < 5; ++m) {
        CHECK(back.factors[m] == f.factors[m]);
        CHECK(back.spectra[m].mode == f.spectra[m].mode);
        CHECK(back.spectra[m].singular_values == f.spectra[m].singular_values);
    }

    std::stringstream ss;
    save_factorset_text(ss, f);
    const FactorSet from_text = load_factorset_text(ss);
    CHECK(from_text.core == f.core);
    CHECK(from_text.w == f.w);
    for (int m = 0; m < 5; ++m) CHECK(from_text.factors[m] == f.factors[m]);
}

TEST_CASE("tensor text export round trips") {
    Rng rng(94);
    const Tensor t = random_tensor({2, 3, 4}, rng);
    std::stringstream ss;
    save_tensor_text(ss, t);
    const Tensor back = load_tensor_text(ss);
    CHECK(back == t);
}

TEST_CASE("dataset file round trips with header fields") {
    const auto shapes = make_identity_shapes(3, 6, 0.03, 17);
    PoseGrid g = PoseGrid::uniform(-20, 20, 10, -10, 10, 10, -10, 10, 10);
    const PoseDataset d = generate_dataset(shapes, g);

    const auto path = temp_dir() / "dataset.txt";
    save_dataset(path, d, g, 17);
    const DatasetFile back = load_dataset(path);
    CHECK(back.seed == 17);
    CHECK(back.dataset.n_landmarks == 6);
    CHECK(back.grid.yaw_bins == g.yaw_bins);
    CHECK(back.grid.pitch_bins == g.pitch_bins);
    CHECK(back.grid.roll_bins == g.roll_bins);
    REQUIRE(back.dataset.samples.size() == d.samples.size());
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        CHECK(back.dataset.samples[i].identity == d.samples[i].identity);
        CHECK(back.dataset.samples[i].pose.yaw == d.samples[i].pose.yaw);
        CHECK(back.dataset.samples[i].features == d.samples[i].features);
    }

    // malformed records are named by line
    const auto bad = temp_dir() / "bad.txt";
    {
        std::ofstream os(bad);
        os << "#nlml-dataset v1 n_landmarks=2 seed=0 yaw=-10:10:10 pitch=-10:10:10 "
              "roll=-10:10:10\n";
        os << "0 0 0 0 1 2 3\n";  // 6 features expected, 3 given
    }
    CHECK_THROWS_AS(load_dataset(bad), DataError);
}

TEST_CASE("params file round trips") {
    const auto shapes = make_identity_shapes(4, 8, 0.04, 23);
    const PoseGrid g = PoseGrid::defaults();
    const PoseDataset d = generate_dataset(shapes, g);
    auto [t, ids] = populate_tensor(d, g);
    const FactorSet f = hosvd(t, {kFullRank, 3, 3, 3, kFullRank});
    SinusoidalParams p;
    p.yaw = fit_axis(Axis::Yaw, f.factors[1], g.yaw_bins);
    p.pitch = fit_axis(Axis::Pitch, f.factors[2], g.pitch_bins);
    p.roll = fit_axis(Axis::Roll, f.factors[3], g.roll_bins);

    const auto path = temp_dir() / "params.txt";
    save_params(path, p);
    const SinusoidalParams back = load_params(path);
    for (Axis a : {Axis::Yaw, Axis::Pitch, Axis::Roll}) {
        const AxisCurves& want = p.axis(a);
        const AxisCurves& got = back.axis(a);
        CHECK(got.grid_angles == want.grid_angles);
        REQUIRE(got.dims.size() == want.dims.size());
        for (std::size_t j = 0; j < want.dims.size(); ++j) {
            CHECK(got.dims[j].params.amplitude == want.dims[j].params.amplitude);
            CHECK(got.dims[j].params.frequency == want.dims[j].params.frequency);
            CHECK(got.dims[j].params.phase == want.dims[j].params.phase);
            CHECK(got.dims[j].params.offset == want.dims[j].params.offset);
            CHECK(got.dims[j].params.degenerate == want.dims[j].params.degenerate);
            CHECK(got.dims[j].residual_rms == want.dims[j].residual_rms);
        }
    }
}

TEST_CASE("model bundle round trips bitwise") {
    ModelBundle b;
    b.encoder = build_encoder(18, 3);
    b.head_yaw = build_head(NetRole::HeadYaw, 3);
    b.head_pitch = build_head(NetRole::HeadPitch, 3);
    b.head_roll = build_head(NetRole::HeadRoll, 3);
    b.ranges = {std::pair{-50.0, 50.0}, std::pair{-40.0, 40.0}, std::pair{-30.0, 30.0}};

    const auto path = temp_dir() / "bundle.txt";
    save_bundle(path, b);
    const ModelBundle back = load_bundle(path);
    CHECK(back.ranges == b.ranges);
    CHECK(back.encoder.layers.size() == b.encoder.layers.size());
    for (std::size_t li = 0; li < b.encoder.layers.size(); ++li) {
        CHECK(back.encoder.layers[li].weights == b.encoder.layers[li].weights);
        CHECK(back.encoder.layers[li].bias == b.encoder.layers[li].bias);
        CHECK(back.encoder.layers[li].activation == b.encoder.layers[li].activation);
    }
    CHECK(back.head_pitch.layers[0].weights == b.head_pitch.layers[0].weights);

    // predictions agree bit-for-bit after the round trip
    Rng rng(95);
    std::vector<double> x(18);
    for (auto& v : x) v = rng.uniform(-1, 1);
    CHECK(forward(back.encoder, x) == forward(b.encoder, x));
}

TEST_CASE("format_double round trips exactly") {
    Rng rng(96);
    for (int i = 0; i < 200; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
        const double back = std::stod(format_double(v));
        CHECK(back == v);
    }
}

}  // TEST_SUITE
