#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ucl/nn_ops.hpp"
#include "ucl/rng.hpp"
#include "ucl/tensor.hpp"

// The three networks of the pipeline: a small depthwise-separable
// convolutional encoder, the two-layer projection head used only during
// contrastive pretraining, and the linear classification ladder trained on
// frozen features.

namespace ucl {

struct EncoderConfig {
    std::size_t input_size = 32;
    std::size_t stem_channels = 16;
    std::vector<std::size_t> block_widths = {32, 64, 128};

    std::size_t feature_dim() const { return block_widths.back(); }

    void validate() const {
        if (block_widths.empty()) throw ValidationError("encoder: needs at least one block");
        if (stem_channels == 0) throw ValidationError("encoder: stem_channels must be positive");
        for (std::size_t w : block_widths)
            if (w == 0) throw ValidationError("encoder: block widths must be positive");
        std::size_t s = input_size;
        for (std::size_t i = 0; i < block_widths.size(); ++i) {
            if (s % 2 != 0 || s < 2)
                throw ValidationError("encoder: input_size " + std::to_string(input_size) +
                                      " does not survive " + std::to_string(block_widths.size()) +
                                      " stride-2 stages");
            s /= 2;
        }
        if (s == 0) throw ValidationError("encoder: input collapses before global pooling");
    }
};

struct ProjectionConfig {
    std::size_t hidden_dim = 128;
    std::size_t output_dim = 64;

    void validate(std::size_t feature_dim) const {
        if (hidden_dim == 0 || output_dim == 0)
            throw ValidationError("projection: dimensions must be positive");
        if (output_dim >= feature_dim)
            throw ValidationError("projection: output_dim " + std::to_string(output_dim) +
                                  " must compress below feature_dim " +
                                  std::to_string(feature_dim));
    }
};

struct ClassifierConfig {
    std::size_t input_dim = 128;
    std::vector<std::size_t> widths = {128, 256, 128, 16}; // paper-scale ladder / 16
    static constexpr double kLeakySlope = 0.4;
    static constexpr std::size_t kClasses = 2;

    void validate() const {
        if (widths.empty()) throw ValidationError("classifier: needs at least one layer");
        if (input_dim == 0) throw ValidationError("classifier: input_dim must be positive");
        for (std::size_t w : widths)
            if (w == 0) throw ValidationError("classifier: widths must be positive");
    }
};

template <typename T>
struct LinearParamsT {
    TensorT<T> weight; // [in, out]
    TensorT<T> bias;   // [out]
};

// Running stats sit behind a shared pointer: tracked copies made per training
// step must feed the same statistics the persistent parameters own.
template <typename T>
struct BatchNormParamsT {
    TensorT<T> gamma;
    TensorT<T> beta;
    std::shared_ptr<BatchNormState<T>> state;
};

template <typename T>
struct SepBlockParamsT {
    TensorT<T> depthwise; // [C,1,3,3]
    TensorT<T> pointwise; // [F,C,1,1]
    BatchNormParamsT<T> bn;
};

template <typename T>
struct EncoderParamsT {
    EncoderConfig config;
    TensorT<T> stem; // [stem_channels,3,3,3]
    BatchNormParamsT<T> stem_bn;
    std::vector<SepBlockParamsT<T>> blocks;
};

template <typename T>
struct ProjectionParamsT {
    ProjectionConfig config;
    LinearParamsT<T> fc1;
    LinearParamsT<T> fc2;
};

template <typename T>
struct ClassifierParamsT {
    ClassifierConfig config;
    std::vector<LinearParamsT<T>> stack;
    LinearParamsT<T> head; // final 2-way layer feeding softmax
};

// ---------------------------------------------------------------------------
// initialization: Kaiming-uniform fan-in for weights, zero biases, unit/zero
// batch-norm affine. One stream per named tensor keeps the result independent
// of traversal batching.

namespace detail {

template <typename T>
void kaiming_fill(TensorT<T>& t, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

} // namespace detail

template <typename T>
EncoderParamsT<T> init_encoder(const EncoderConfig& config, std::uint64_t seed) {
    config.validate();
    EncoderParamsT<T> p;
    p.config = config;
    std::uint64_t stream = 0;
    auto next = [&] { return Rng::stream(seed, rng_purpose::kInit, stream++); };

    p.stem = TensorT<T>({config.stem_channels, 3, 3, 3});
    {
        Rng rng = next();
        detail::kaiming_fill(p.stem, 3 * 3 * 3, rng);
    }
    p.stem_bn.gamma = TensorT<T>::ones({config.stem_channels});
    p.stem_bn.beta = TensorT<T>({config.stem_channels});
    p.stem_bn.state = std::make_shared<BatchNormState<T>>(config.stem_channels);

    std::size_t in_ch = config.stem_channels;
    for (std::size_t width : config.block_widths) {
        SepBlockParamsT<T> block;
        block.depthwise = TensorT<T>({in_ch, 1, 3, 3});
        {
            Rng rng = next();
            detail::kaiming_fill(block.depthwise, 3 * 3, rng);
        }
        block.pointwise = TensorT<T>({width, in_ch, 1, 1});
        {
            Rng rng = next();
            detail::kaiming_fill(block.pointwise, in_ch, rng);
        }
        block.bn.gamma = TensorT<T>::ones({width});
        block.bn.beta = TensorT<T>({width});
        block.bn.state = std::make_shared<BatchNormState<T>>(width);
        p.blocks.push_back(std::move(block));
        in_ch = width;
    }
    return p;
}

template <typename T>
LinearParamsT<T> init_linear(std::size_t in, std::size_t out, Rng rng) {
    LinearParamsT<T> l;
    l.weight = TensorT<T>({in, out});
    detail::kaiming_fill(l.weight, in, rng);
    l.bias = TensorT<T>({out});
    return l;
}

template <typename T>
ProjectionParamsT<T> init_projection(std::size_t feature_dim, const ProjectionConfig& config,
                                     std::uint64_t seed) {
    config.validate(feature_dim);
    ProjectionParamsT<T> p;
    p.config = config;
    p.fc1 = init_linear<T>(feature_dim, config.hidden_dim,
                           Rng::stream(seed, rng_purpose::kInit, 100));
    p.fc2 = init_linear<T>(config.hidden_dim, config.output_dim,
                           Rng::stream(seed, rng_purpose::kInit, 101));
    return p;
}

template <typename T>
ClassifierParamsT<T> init_classifier(const ClassifierConfig& config, std::uint64_t seed) {
    config.validate();
    ClassifierParamsT<T> p;
    p.config = config;
    std::size_t in = config.input_dim;
    std::uint64_t stream = 200;
    for (std::size_t width : config.widths) {
        p.stack.push_back(init_linear<T>(in, width, Rng::stream(seed, rng_purpose::kInit, stream++)));
        in = width;
    }
    p.head = init_linear<T>(in, ClassifierConfig::kClasses,
                            Rng::stream(seed, rng_purpose::kInit, stream));
    return p;
}

// ---------------------------------------------------------------------------
// named traversal (checkpointing, tracking, SGD)

template <typename T, typename Fn>
void for_each_tensor(EncoderParamsT<T>& p, Fn&& fn) {
    fn("encoder.stem.weight", p.stem);
    fn("encoder.stem_bn.gamma", p.stem_bn.gamma);
    fn("encoder.stem_bn.beta", p.stem_bn.beta);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const std::string base = "encoder.block" + std::to_string(i);
        fn(base + ".depthwise.weight", p.blocks[i].depthwise);
        fn(base + ".pointwise.weight", p.blocks[i].pointwise);
        fn(base + ".bn.gamma", p.blocks[i].bn.gamma);
        fn(base + ".bn.beta", p.blocks[i].bn.beta);
    }
}

template <typename T, typename Fn>
void for_each_tensor(ProjectionParamsT<T>& p, Fn&& fn) {
    fn("projection.fc1.weight", p.fc1.weight);
    fn("projection.fc1.bias", p.fc1.bias);
    fn("projection.fc2.weight", p.fc2.weight);
    fn("projection.fc2.bias", p.fc2.bias);
}

template <typename T, typename Fn>
void for_each_tensor(ClassifierParamsT<T>& p, Fn&& fn) {
    for (std::size_t i = 0; i < p.stack.size(); ++i) {
        const std::string base = "classifier.fc" + std::to_string(i);
        fn(base + ".weight", p.stack[i].weight);
        fn(base + ".bias", p.stack[i].bias);
    }
    fn("classifier.head.weight", p.head.weight);
    fn("classifier.head.bias", p.head.bias);
}

/// Copy of the parameter struct whose tensors are leaves of `tape`. The copies
/// share buffers with the originals, so in-place SGD updates through the
/// original struct are visible to the next forward pass.
template <typename T, typename Params>
Params tracked(TapeT<T>& tape, const Params& params) {
    Params copy = params;
    for_each_tensor(copy, [&](const std::string&, TensorT<T>& t) { t = tape.track(t); });
    return copy;
}

// ---------------------------------------------------------------------------
// forward passes

/// Stem conv, then per block: depthwise-separable conv, batch norm, relu and a
/// stride-2 max-pool; global average pooling closes the trunk.
template <typename T>
TensorT<T> encoder_forward(const TensorT<T>& batch, EncoderParamsT<T>& params, BnMode mode) {
    const EncoderConfig& cfg = params.config;
    if (batch.ndim() != 4 || batch.shape()[1] != 3)
        throw ValidationError("encoder: expects [B,3,H,W], got " + shape_str(batch.shape()));
    if (batch.shape()[2] != cfg.input_size || batch.shape()[3] != cfg.input_size)
        throw ValidationError("encoder: spatial size " + std::to_string(batch.shape()[2]) + "x" +
                              std::to_string(batch.shape()[3]) + " does not match configured " +
                              std::to_string(cfg.input_size));
    TensorT<T> h = conv2d(batch, params.stem, 1, 1);
    h = batch_norm2d(h, params.stem_bn.gamma, params.stem_bn.beta, mode, *params.stem_bn.state);
    h = relu(h);
    for (auto& block : params.blocks) {
        h = depthwise_separable_conv2d(h, block.depthwise, block.pointwise, 1, 1);
        h = batch_norm2d(h, block.bn.gamma, block.bn.beta, mode, *block.bn.state);
        h = relu(h);
        h = max_pool2d(h, 2, 2);
    }
    return global_avg_pool2d(h);
}

/// z = W2 * relu(W1 * f + b1) + b2
template <typename T>
TensorT<T> projection_forward(const TensorT<T>& features, const ProjectionParamsT<T>& params) {
    TensorT<T> hidden = relu(matmul(features, params.fc1.weight) + params.fc1.bias);
    return matmul(hidden, params.fc2.weight) + params.fc2.bias;
}

/// Linear ladder with one leaky-relu (slope 0.4) after the last listed layer,
/// then the 2-way head.
template <typename T>
TensorT<T> classifier_logits(const TensorT<T>& features, const ClassifierParamsT<T>& params) {
    if (features.ndim() != 2 || features.shape()[1] != params.config.input_dim)
        throw ValidationError("classifier: features " + shape_str(features.shape()) +
                              " do not match layer-1 width " +
                              std::to_string(params.config.input_dim));
    TensorT<T> h = features;
    for (const auto& layer : params.stack) h = matmul(h, layer.weight) + layer.bias;
    h = leaky_relu(h, static_cast<T>(ClassifierConfig::kLeakySlope));
    return matmul(h, params.head.weight) + params.head.bias;
}

/// Softmax probabilities; rows sum to one.
template <typename T>
TensorT<T> classifier_forward(const TensorT<T>& features, const ClassifierParamsT<T>& params) {
    return softmax_rows(classifier_logits(features, params));
}

using EncoderParams = EncoderParamsT<float>;
using ProjectionParams = ProjectionParamsT<float>;
using ClassifierParams = ClassifierParamsT<float>;

} // namespace ucl
