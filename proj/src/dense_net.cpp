// SPDX-License-Identifier: Apache-2.0

#include "nlml/dense_net.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "nlml/errors.hpp"
#include "nlml/kernels.hpp"
#include "nlml/rng.hpp"

namespace nlml {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        default: return "identity";
    }
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    throw DataError("unknown activation: " + name);
}

const char* role_name(NetRole r) {
    switch (r) {
        case NetRole::Encoder: return "encoder";
        case NetRole::HeadYaw: return "head_yaw";
        case NetRole::HeadPitch: return "head_pitch";
        default: return "head_roll";
    }
}

NetRole role_from_name(const std::string& name) {
    if (name == "encoder") return NetRole::Encoder;
    if (name == "head_yaw") return NetRole::HeadYaw;
    if (name == "head_pitch") return NetRole::HeadPitch;
    if (name == "head_roll") return NetRole::HeadRoll;
    throw DataError("unknown net role: " + name);
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

std::string DenseNet::architecture() const {
    std::ostringstream oss;
    oss << input_dim();
    for (const auto& l : layers) oss << "-" << l.out << ":" << activation_name(l.activation);
    return oss.str();
}

namespace {

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    Layer l;
    l.in = in;
    l.out = out;
    l.activation = act;
    l.weights.resize(in * out);
    l.bias.assign(out, 0.0);
    // He-style uniform init
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    for (double& w : l.weights) w = rng.uniform(-limit, limit);
    return l;
}

void apply_activation(Activation act, const double* z, double* out, std::size_t n) {
    switch (act) {
        case Activation::ReLU: kernels::relu(z, out, n); break;
        case Activation::Tanh: kernels::tanh_eval(z, out, n); break;
        case Activation::Identity:
            if (out != z) std::copy(z, z + n, out);
            break;
    }
}

}  // namespace

DenseNet build_encoder(std::size_t input_dim, std::uint64_t seed) {
    if (input_dim < 1) throw UsageError("build_encoder: input_dim must be positive");
    Rng rng(seed ^ 0xe5c0de5ull);
    DenseNet net;
    net.role = NetRole::Encoder;
    net.init_seed = seed;
    const std::size_t widths[] = {input_dim, 1024, 512, 256, 128, 64, 9};
    for (std::size_t i = 0; i + 1 < std::size(widths); ++i) {
        Activation act = Activation::ReLU;
        if (widths[i + 1] == 64) act = Activation::Tanh;
        if (widths[i + 1] == 9) act = Activation::Identity;
        net.layers.push_back(make_layer(widths[i], widths[i + 1], act, rng));
    }
    return net;
}

DenseNet build_head(NetRole role, std::uint64_t seed) {
    if (role == NetRole::Encoder) throw UsageError("build_head: role must be a head");
    Rng rng(seed ^ (0x4ead5ull + static_cast<std::uint64_t>(role)));
    DenseNet net;
    net.role = role;
    net.init_seed = seed;
    net.layers.push_back(make_layer(3, 64, Activation::ReLU, rng));
    net.layers.push_back(make_layer(64, 64, Activation::ReLU, rng));
    net.layers.push_back(make_layer(64, 1, Activation::Identity, rng));
    return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input) {
    if (net.layers.empty()) throw UsageError("forward: empty network");
    if (input.size() != net.input_dim())
        throw UsageError("forward: input length " + std::to_string(input.size()) +
                         " does not match input_dim " + std::to_string(net.input_dim()));

    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (const auto& l : net.layers) {
        next.assign(l.bias.begin(), l.bias.end());
        // z = W x + b, row-major W
        for (std::size_t o = 0; o < l.out; ++o)
            next[o] += kernels::dot(l.weights.data() + o * l.in, cur.data(), l.in);
        apply_activation(l.activation, next.data(), next.data(), l.out);
        cur.swap(next);
    }
    return cur;
}

namespace {

struct BatchWorkspace {
    // per layer: pre-activation z and activation a, batch-major (b x out)
    std::vector<Matrix> zs;
    std::vector<Matrix> as;
};

// Forward pass for a batch; rows of x are samples.
void batch_forward(const DenseNet& net, const Matrix& x, BatchWorkspace& ws) {
    const std::size_t b = x.rows();
    ws.zs.resize(net.layers.size());
    ws.as.resize(net.layers.size());
    const Matrix* cur = &x;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        Matrix& z = ws.zs[li];
        z = Matrix(b, l.out);
        for (std::size_t r = 0; r < b; ++r)
            std::copy(l.bias.begin(), l.bias.end(), z.row(r));
        // z += cur * W^T
        kernels::gemm_nt(b, l.out, l.in, cur->data(), l.weights.data(), z.data());
        Matrix& a = ws.as[li];
        a = Matrix(b, l.out);
        apply_activation(l.activation, z.data(), a.data(), z.size());
        cur = &a;
    }
}

}  // namespace

double loss_and_gradient(const DenseNet& net, const Matrix& x, const Matrix& y, Gradients& g) {
    if (x.rows() != y.rows()) throw UsageError("loss_and_gradient: batch size mismatch");
    if (x.cols() != net.input_dim() || y.cols() != net.output_dim())
        throw UsageError("loss_and_gradient: dimension mismatch");
    const std::size_t b = x.rows();
    if (b == 0) throw UsageError("loss_and_gradient: empty batch");

    BatchWorkspace ws;
    batch_forward(net, x, ws);

    const std::size_t n_layers = net.layers.size();
    g.weights.resize(n_layers);
    g.bias.resize(n_layers);

    const Matrix& out = ws.as.back();
    const double denom = static_cast<double>(b * y.cols());
    Matrix delta(b, y.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double diff = out.data()[i] - y.data()[i];
        loss += diff * diff;
        delta.data()[i] = 2.0 * diff / denom;
    }
    loss /= denom;

    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& l = net.layers[li];
        // delta through the activation
        Matrix dz(b, l.out);
        switch (l.activation) {
            case Activation::ReLU:
                kernels::relu_grad(ws.zs[li].data(), delta.data(), dz.data(), dz.size());
                break;
            case Activation::Tanh:
                kernels::tanh_grad(ws.as[li].data(), delta.data(), dz.data(), dz.size());
                break;
            case Activation::Identity:
                std::copy(delta.data(), delta.data() + delta.size(), dz.data());
                break;
        }

        const Matrix& input = li == 0 ? x : ws.as[li - 1];
        auto& gw = g.weights[li];
        auto& gb = g.bias[li];
        gw.assign(l.weights.size(), 0.0);
        gb.assign(l.out, 0.0);
        // dW = dz^T * input  (out x in)
        kernels::gemm_tn(l.out, l.in, b, dz.data(), input.data(), gw.data());
        for (std::size_t r = 0; r < b; ++r)
            kernels::axpy(1.0, dz.row(r), gb.data(), l.out);

        if (li > 0) {
            // dX = dz * W  (b x in)
            Matrix dx(b, l.in);
            kernels::gemm_nn(b, l.in, l.out, dz.data(), l.weights.data(), dx.data());
            delta = std::move(dx);
        }
    }
    return loss;
}

TrainResult train(DenseNet& net, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& cfg) {
    if (inputs.rows() == 0) throw UsageError("train: no samples");
    if (inputs.rows() != targets.rows()) throw UsageError("train: inputs/targets mismatch");
    if (cfg.batch_size == 0) throw UsageError("train: batch_size must be positive");
    if (!(cfg.learning_rate >= 0.0)) throw UsageError("train: negative learning rate");

    const std::size_t n = inputs.rows();
    const std::size_t n_layers = net.layers.size();

    // Adam moment buffers
    std::vector<std::vector<double>> mw(n_layers), vw(n_layers), mb(n_layers), vb(n_layers);
    for (std::size_t li = 0; li < n_layers; ++li) {
        mw[li].assign(net.layers[li].weights.size(), 0.0);
        vw[li].assign(net.layers[li].weights.size(), 0.0);
        mb[li].assign(net.layers[li].bias.size(), 0.0);
        vb[li].assign(net.layers[li].bias.size(), 0.0);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed ^ 0x7a17ull);

    TrainResult result;
    result.loss_history.reserve(cfg.epochs);
    Gradients g;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t bs = std::min(cfg.batch_size, n - begin);
            Matrix bx(bs, inputs.cols());
            Matrix by(bs, targets.cols());
            for (std::size_t r = 0; r < bs; ++r) {
                const std::size_t src = order[begin + r];
                std::copy(inputs.row(src), inputs.row(src) + inputs.cols(), bx.row(r));
                std::copy(targets.row(src), targets.row(src) + targets.cols(), by.row(r));
            }

            const double loss = loss_and_gradient(net, bx, by, g);
            if (!std::isfinite(loss))
                throw NumericError("train: loss diverged (non-finite) at epoch " +
                                   std::to_string(epoch) + ", step " + std::to_string(step));
            epoch_loss += loss * static_cast<double>(bs);
            seen += bs;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t li = 0; li < n_layers; ++li) {
                Layer& l = net.layers[li];
                kernels::adam_step(l.weights.data(), mw[li].data(), vw[li].data(),
                                   g.weights[li].data(), l.weights.size(), cfg.learning_rate,
                                   cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
                kernels::adam_step(l.bias.data(), mb[li].data(), vb[li].data(), g.bias[li].data(),
                                   l.bias.size(), cfg.learning_rate, cfg.beta1, cfg.beta2,
                                   cfg.eps, bc1, bc2);
            }
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(seen));
    }
    return result;
}

Matrix encoder_targets(const FactorSet& f, const PoseDataset& d, const PoseGrid& grid) {
    const Matrix& ay = f.factors[1];
    const Matrix& ap = f.factors[2];
    const Matrix& ar = f.factors[3];
    const std::size_t ky = ay.cols(), kp = ap.cols(), kr = ar.cols();
    Matrix t(d.samples.size(), ky + kp + kr);
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& s = d.samples[i];
        const std::size_t iy = grid.bin_index(Axis::Yaw, s.pose.yaw);
        const std::size_t ip = grid.bin_index(Axis::Pitch, s.pose.pitch);
        const std::size_t ir = grid.bin_index(Axis::Roll, s.pose.roll);
        double* row = t.row(i);
        for (std::size_t j = 0; j < ky; ++j) row[j] = ay(iy, j);
        for (std::size_t j = 0; j < kp; ++j) row[ky + j] = ap(ip, j);
        for (std::size_t j = 0; j < kr; ++j) row[ky + kp + j] = ar(ir, j);
    }
    return t;
}

Matrix encoder_targets_smoothed(const SinusoidalParams& params, const PoseDataset& d,
                                const PoseGrid& grid) {
    const std::size_t ky = params.yaw.dims.size();
    const std::size_t kp = params.pitch.dims.size();
    const std::size_t kr = params.roll.dims.size();
    Matrix t(d.samples.size(), ky + kp + kr);
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& s = d.samples[i];
        // validate the sample is on-grid, as for raw targets
        grid.bin_index(Axis::Yaw, s.pose.yaw);
        grid.bin_index(Axis::Pitch, s.pose.pitch);
        grid.bin_index(Axis::Roll, s.pose.roll);
        double* row = t.row(i);
        for (std::size_t j = 0; j < ky; ++j)
            row[j] = eval_curve(params.yaw.dims[j].params, s.pose.yaw);
        for (std::size_t j = 0; j < kp; ++j)
            row[ky + j] = eval_curve(params.pitch.dims[j].params, s.pose.pitch);
        for (std::size_t j = 0; j < kr; ++j)
            row[ky + kp + j] = eval_curve(params.roll.dims[j].params, s.pose.roll);
    }
    return t;
}

std::pair<Matrix, std::vector<double>> head_training_set(const FineFactorTable& table) {
    if (table.rows.rows() == 0) throw UsageError("head_training_set: empty table");
    Matrix inputs = table.rows;
    std::vector<double> targets(table.rows.rows());
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = table.angle_at(i);
    return {std::move(inputs), std::move(targets)};
}

}  // namespace nlml
