// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlml/hosvd.hpp"
#include "nlml/matrix.hpp"
#include "nlml/posegen.hpp"
#include "nlml/sinusoid.hpp"

namespace nlml {

enum class Activation { ReLU, Tanh, Identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

enum class NetRole { Encoder, HeadYaw, HeadPitch, HeadRoll };

const char* role_name(NetRole r);
NetRole role_from_name(const std::string& name);

/// One affine layer with its activation; weights row-major (out x in).
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::Identity;
};

/// Plain fully connected feed-forward network.
struct DenseNet {
    NetRole role = NetRole::Encoder;
    std::vector<Layer> layers;
    std::uint64_t init_seed = 0;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t parameter_count() const;
    /// Layer dims + activations, for architecture comparisons.
    std::string architecture() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainResult {
    /// Mean MSE per epoch, in epoch order.
    std::vector<double> loss_history;
};

/// Parameter gradients matching a DenseNet layout.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

/// Landmark encoder: input -> 1024 -> 512 -> 256 -> 128 -> 64 -> 9 with ReLU
/// on the intermediate layers except the 64-unit one, which uses tanh; the
/// final layer is linear.
DenseNet build_encoder(std::size_t input_dim, std::uint64_t seed);

/// Angle regression head: 3 -> 64 -> 64 -> 1, ReLU between, linear output.
DenseNet build_head(NetRole role, std::uint64_t seed);

std::vector<double> forward(const DenseNet& net, std::span<const double> input);

/// Mean squared error over the batch and its parameter gradients via
/// backprop; rows of x/y are samples.
double loss_and_gradient(const DenseNet& net, const Matrix& x, const Matrix& y, Gradients& g);

/// Mini-batch Adam on the MSE loss. Deterministic in (net state, cfg.seed,
/// data order). Throws NumericError if the loss goes non-finite.
TrainResult train(DenseNet& net, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& cfg);

/// Encoder ground truth: for a sample at bins (iy, ip, ir) the target is the
/// concatenation of factor rows A(y)[iy], A(p)[ip], A(r)[ir]. With
/// `smoothed` set, rows come from the fitted cosine curves evaluated at the
/// bin angles instead of the raw factor matrices.
Matrix encoder_targets(const FactorSet& f, const PoseDataset& d, const PoseGrid& grid);
Matrix encoder_targets_smoothed(const SinusoidalParams& params, const PoseDataset& d,
                                const PoseGrid& grid);

/// Head ground truth: one (factor row -> angle) pair per fine-table row.
std::pair<Matrix, std::vector<double>> head_training_set(const FineFactorTable& table);

}  // namespace nlml
