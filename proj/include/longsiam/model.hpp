#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "longsiam/layers.hpp"
#include "longsiam/rng.hpp"
#include "longsiam/tensor.hpp"

namespace longsiam {

struct ModelConfig {
    Shape input_shape{102, 108, 75};
    std::array<int64_t, 3> block_filters{4, 8, 16};
    std::array<int64_t, 3> dense_widths{64, 16, 2};
    double leaky_alpha = 0.01;
    double dropout_rate = 0.5;
    double l2_coeff = 1e-4;
    double bn_epsilon = 1e-3;
    double bn_momentum = 0.99;
    uint64_t seed = 0;

    void validate() const {
        if (input_shape.rank() != 3)
            throw std::invalid_argument("model: input_shape must have 3 extents");
        for (int64_t i = 0; i < 3; ++i)
            if (input_shape[i] < 8)
                throw std::invalid_argument(
                    "model: each input extent must be >= 8 to survive three pooling stages");
        for (int64_t f : block_filters)
            if (f < 1) throw std::invalid_argument("model: block filter counts must be >= 1");
        for (int64_t w : dense_widths)
            if (w < 1) throw std::invalid_argument("model: dense widths must be >= 1");
        if (dense_widths[2] != 2)
            throw std::invalid_argument("model: final dense width is fixed to 2 classes");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("model: dropout_rate must be in [0, 1)");
        if (l2_coeff < 0.0) throw std::invalid_argument("model: l2_coeff must be >= 0");
        if (bn_epsilon <= 0.0) throw std::invalid_argument("model: bn_epsilon must be > 0");
    }

    /// Spatial extents after pooling stage `i+1` (i in 0..2).
    Shape stage_spatial(int i) const {
        const int64_t div = int64_t(1) << (i + 1);
        return Shape{input_shape[0] / div, input_shape[1] / div, input_shape[2] / div};
    }

    int64_t flatten_size() const {
        const Shape s = stage_spatial(2);
        return block_filters[2] * s[0] * s[1] * s[2];
    }
};

template <typename T>
struct BranchBlock {
    Conv3dParams<T> conv;
    BatchNormParams<T> bn;
};

/// Both siamese branches are realized by this single parameter set; weight
/// sharing is structural, never copied.
template <typename T>
struct SiameseNet {
    std::array<BranchBlock<T>, 3> branch;
    DenseParams<T> dense1, dense2, dense3;
    BatchNormParams<T> head_bn1, head_bn2;
    ModelConfig config;
};

template <typename T>
SiameseNet<T> build(const ModelConfig& config) {
    config.validate();
    SiameseNet<T> net;
    net.config = config;
    Rng rng(derive_seed(config.seed, 0xB00D));
    int64_t c_in = 1;
    for (int i = 0; i < 3; ++i) {
        net.branch[i].conv = init_conv3d<T>(config.block_filters[i], c_in, rng);
        net.branch[i].bn = init_batchnorm<T>(config.block_filters[i]);
        net.branch[i].bn.epsilon = static_cast<T>(config.bn_epsilon);
        net.branch[i].bn.momentum = static_cast<T>(config.bn_momentum);
        c_in = config.block_filters[i];
    }
    net.dense1 = init_dense<T>(config.flatten_size(), config.dense_widths[0], rng);
    net.dense2 = init_dense<T>(config.dense_widths[0], config.dense_widths[1], rng);
    net.dense3 = init_dense<T>(config.dense_widths[1], config.dense_widths[2], rng);
    net.head_bn1 = init_batchnorm<T>(config.dense_widths[0]);
    net.head_bn2 = init_batchnorm<T>(config.dense_widths[1]);
    for (BatchNormParams<T>* bn : {&net.head_bn1, &net.head_bn2}) {
        bn->epsilon = static_cast<T>(config.bn_epsilon);
        bn->momentum = static_cast<T>(config.bn_momentum);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Forward / backward over an input pair.
// ---------------------------------------------------------------------------

template <typename T>
struct FeatureTaps {
    Tensor<T> input_concat;   // [N, 2·volume]
    Tensor<T> branch_concat;  // [N, 2·flatten]
    Tensor<T> subtract_out;   // [N, flatten]
    Tensor<T> dense2_out;     // [N, dense_widths[1]]
};

enum class FeatureStage { InputConcat, BranchConcat, SubtractOut, Dense2Out };

inline FeatureStage parse_feature_stage(const std::string& s) {
    if (s == "input_concat") return FeatureStage::InputConcat;
    if (s == "branch_concat") return FeatureStage::BranchConcat;
    if (s == "subtract_out") return FeatureStage::SubtractOut;
    if (s == "dense2_out") return FeatureStage::Dense2Out;
    throw std::invalid_argument("unknown feature stage: " + s);
}

inline const char* feature_stage_name(FeatureStage s) {
    switch (s) {
        case FeatureStage::InputConcat: return "input_concat";
        case FeatureStage::BranchConcat: return "branch_concat";
        case FeatureStage::SubtractOut: return "subtract_out";
        case FeatureStage::Dense2Out: return "dense2_out";
    }
    throw std::logic_error("invalid feature stage");
}

template <typename T>
struct BlockTape {
    Conv3dTape<T> conv;
    BatchNormTape<T> bn;
    Tensor<T> relu_out;  // leaky-ReLU backward runs off the output sign
    AvgPoolTape<T> pool;
};

template <typename T>
struct PairTapes {
    std::array<BlockTape<T>, 3> base, foll;
    DenseTape<T> d1;
    BatchNormTape<T> hb1;
    Tensor<T> h1_out;
    DenseTape<T> d2;
    BatchNormTape<T> hb2;
    Tensor<T> h2_out;
    Tensor<T> drop_mask;
    DenseTape<T> d3;
    Tensor<T> probs;
    Mode mode = Mode::Infer;
};

namespace detail {

template <typename T>
Tensor<T> branch_forward(const SiameseNet<T>& net, const Tensor<T>& input4, Mode mode,
                         std::array<BlockTape<T>, 3>& tapes) {
    const int64_t N = input4.shape()[0];
    Tensor<T> x = reshape(input4, Shape{N, 1, input4.shape()[1], input4.shape()[2],
                                        input4.shape()[3]});
    for (int i = 0; i < 3; ++i) {
        auto [c, ct] = conv3d_forward(x, net.branch[i].conv);
        auto [b, bt] = batchnorm_forward(c, net.branch[i].bn, mode);
        Tensor<T> r = leaky_relu(b, static_cast<T>(net.config.leaky_alpha));
        auto [p, pt] = avgpool3d_forward(r);
        tapes[i] = BlockTape<T>{std::move(ct), std::move(bt), std::move(r), std::move(pt)};
        x = std::move(p);
    }
    return reshape(x, Shape{N, net.config.flatten_size()});
}

template <typename T>
void branch_backward(const SiameseNet<T>& net, const std::array<BlockTape<T>, 3>& tapes,
                     const Tensor<T>& grad_flat, Conv3dGrads<T>* block_grads,
                     Tensor<T>* bn_gamma_grads, Tensor<T>* bn_beta_grads) {
    const int64_t N = grad_flat.shape()[0];
    const Shape s2 = net.config.stage_spatial(2);
    Tensor<T> g = reshape(grad_flat,
                          Shape{N, net.config.block_filters[2], s2[0], s2[1], s2[2]});
    for (int i = 2; i >= 0; --i) {
        Tensor<T> gr = avgpool3d_backward(g, tapes[i].pool);
        Tensor<T> gb = leaky_relu_backward(gr, tapes[i].relu_out,
                                           static_cast<T>(net.config.leaky_alpha));
        BatchNormGrads<T> bg = batchnorm_backward(gb, tapes[i].bn, net.branch[i].bn);
        Conv3dGrads<T> cg =
            conv3d_backward(bg.x, tapes[i].conv, net.branch[i].conv, /*need_grad_x=*/i > 0);
        bn_gamma_grads[i] = std::move(bg.gamma);
        bn_beta_grads[i] = std::move(bg.beta);
        block_grads[i] = std::move(cg);
        if (i > 0) g = std::move(block_grads[i].x);
    }
}

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
    const int64_t N = a.shape()[0], A = a.shape()[1], B = b.shape()[1];
    Tensor<T> out = Tensor<T>::zeros(Shape{N, A + B});
    for (int64_t n = 0; n < N; ++n) {
        std::copy(a.data() + n * A, a.data() + (n + 1) * A, out.data() + n * (A + B));
        std::copy(b.data() + n * B, b.data() + (n + 1) * B, out.data() + n * (A + B) + A);
    }
    return out;
}

}  // namespace detail

template <typename T>
struct PairResult {
    Tensor<T> probs;  // [N, 2]
    FeatureTaps<T> taps;
    PairTapes<T> tapes;
};

/// Runs both inputs through the shared branch, fuses by subtraction
/// (baseline − followup), and applies the classifier head. `want_taps`
/// controls whether the four analysis feature tensors are materialized
/// (training loops skip them to save memory).
template <typename T>
PairResult<T> forward_pair(const SiameseNet<T>& net, const Tensor<T>& baseline,
                           const Tensor<T>& followup, Mode mode, Rng& rng,
                           bool want_taps = true) {
    const Shape& in = net.config.input_shape;
    auto check = [&](const Tensor<T>& t, const char* which) {
        if (t.shape().rank() != 4 || t.shape()[1] != in[0] || t.shape()[2] != in[1] ||
            t.shape()[3] != in[2])
            throw std::invalid_argument(std::string("forward_pair: ") + which +
                                        " must be [N," + std::to_string(in[0]) + "," +
                                        std::to_string(in[1]) + "," + std::to_string(in[2]) + "]");
    };
    check(baseline, "baseline");
    check(followup, "followup");
    if (baseline.shape()[0] != followup.shape()[0])
        throw std::invalid_argument("forward_pair: batch size mismatch");
    const int64_t N = baseline.shape()[0];

    PairResult<T> r;
    r.tapes.mode = mode;
    Tensor<T> flat_b = detail::branch_forward(net, baseline, mode, r.tapes.base);
    Tensor<T> flat_f = detail::branch_forward(net, followup, mode, r.tapes.foll);
    Tensor<T> diff = sub(flat_b, flat_f);

    if (want_taps) {
        const int64_t V = in.count();
        r.taps.input_concat = detail::concat_rows(reshape(baseline, Shape{N, V}),
                                                  reshape(followup, Shape{N, V}));
        r.taps.branch_concat = detail::concat_rows(flat_b, flat_f);
        r.taps.subtract_out = diff;
    }

    auto [z1, d1t] = dense_forward(diff, net.dense1);
    auto [b1, hb1t] = batchnorm_forward(z1, net.head_bn1, mode);
    Tensor<T> h1 = leaky_relu(b1, static_cast<T>(net.config.leaky_alpha));
    auto [z2, d2t] = dense_forward(h1, net.dense2);
    auto [b2, hb2t] = batchnorm_forward(z2, net.head_bn2, mode);
    Tensor<T> h2 = leaky_relu(b2, static_cast<T>(net.config.leaky_alpha));
    if (want_taps) r.taps.dense2_out = h2;
    auto [dr, mask] = dropout(h2, net.config.dropout_rate, mode, rng);
    auto [z3, d3t] = dense_forward(dr, net.dense3);
    r.probs = softmax(z3);

    r.tapes.d1 = std::move(d1t);
    r.tapes.hb1 = std::move(hb1t);
    r.tapes.h1_out = std::move(h1);
    r.tapes.d2 = std::move(d2t);
    r.tapes.hb2 = std::move(hb2t);
    r.tapes.h2_out = std::move(h2);
    r.tapes.drop_mask = std::move(mask);
    r.tapes.d3 = std::move(d3t);
    r.tapes.probs = r.probs;
    return r;
}

/// After a train-mode forward, fold the recorded batch statistics into the
/// running stats: branch normalizers see the baseline pass first, then the
/// follow-up pass; head normalizers commit once.
template <typename T>
void commit_running_stats(SiameseNet<T>& net, const PairTapes<T>& tapes) {
    for (int i = 0; i < 3; ++i) {
        batchnorm_commit_running_stats(net.branch[i].bn, tapes.base[i].bn);
        batchnorm_commit_running_stats(net.branch[i].bn, tapes.foll[i].bn);
    }
    batchnorm_commit_running_stats(net.head_bn1, tapes.hb1);
    batchnorm_commit_running_stats(net.head_bn2, tapes.hb2);
}

template <typename T>
struct BlockGrads {
    Tensor<T> kernels, conv_bias, gamma, beta;
};

template <typename T>
struct SiameseGrads {
    std::array<BlockGrads<T>, 3> branch;
    Tensor<T> d1_w, d1_b, hb1_gamma, hb1_beta;
    Tensor<T> d2_w, d2_b, hb2_gamma, hb2_beta;
    Tensor<T> d3_w, d3_b;
};

/// grad_probs is the loss gradient with respect to the softmax output.
/// Branch gradients from the two input paths are summed into the single
/// shared parameter set.
template <typename T>
SiameseGrads<T> backward_pair(const SiameseNet<T>& net, const PairTapes<T>& tapes,
                              const Tensor<T>& grad_probs) {
    if (tapes.mode != Mode::Train)
        throw std::logic_error("backward_pair: tapes were recorded in infer mode");
    if (grad_probs.shape() != tapes.probs.shape())
        throw std::invalid_argument("backward_pair: grad_probs shape mismatch");
    const int64_t N = grad_probs.shape()[0], K = grad_probs.shape()[1];

    // Through softmax: dz_k = p_k (g_k − Σ_j g_j p_j).
    Tensor<T> gz3 = Tensor<T>::zeros(grad_probs.shape());
    for (int64_t n = 0; n < N; ++n) {
        const T* p = tapes.probs.data() + n * K;
        const T* g = grad_probs.data() + n * K;
        T dot = 0;
        for (int64_t k = 0; k < K; ++k) dot += g[k] * p[k];
        for (int64_t k = 0; k < K; ++k) gz3[n * K + k] = p[k] * (g[k] - dot);
    }

    SiameseGrads<T> out;
    DenseGrads<T> g3 = dense_backward(gz3, tapes.d3, net.dense3);
    out.d3_w = std::move(g3.weights);
    out.d3_b = std::move(g3.bias);
    Tensor<T> gh2 = dropout_backward(g3.x, tapes.drop_mask, net.config.dropout_rate);
    Tensor<T> gb2 = leaky_relu_backward(gh2, tapes.h2_out,
                                        static_cast<T>(net.config.leaky_alpha));
    BatchNormGrads<T> n2 = batchnorm_backward(gb2, tapes.hb2, net.head_bn2);
    out.hb2_gamma = std::move(n2.gamma);
    out.hb2_beta = std::move(n2.beta);
    DenseGrads<T> g2 = dense_backward(n2.x, tapes.d2, net.dense2);
    out.d2_w = std::move(g2.weights);
    out.d2_b = std::move(g2.bias);
    Tensor<T> gb1 = leaky_relu_backward(g2.x, tapes.h1_out,
                                        static_cast<T>(net.config.leaky_alpha));
    BatchNormGrads<T> n1 = batchnorm_backward(gb1, tapes.hb1, net.head_bn1);
    out.hb1_gamma = std::move(n1.gamma);
    out.hb1_beta = std::move(n1.beta);
    DenseGrads<T> g1 = dense_backward(n1.x, tapes.d1, net.dense1);
    out.d1_w = std::move(g1.weights);
    out.d1_b = std::move(g1.bias);

    // diff = flat_base − flat_foll
    Tensor<T> g_foll = neg(g1.x);
    std::array<Conv3dGrads<T>, 3> cg_b, cg_f;
    std::array<Tensor<T>, 3> gam_b, bet_b, gam_f, bet_f;
    detail::branch_backward(net, tapes.base, g1.x, cg_b.data(), gam_b.data(), bet_b.data());
    detail::branch_backward(net, tapes.foll, g_foll, cg_f.data(), gam_f.data(), bet_f.data());
    for (int i = 0; i < 3; ++i) {
        out.branch[i].kernels = add(cg_b[i].kernels, cg_f[i].kernels);
        out.branch[i].conv_bias = add(cg_b[i].bias, cg_f[i].bias);
        out.branch[i].gamma = add(gam_b[i], gam_f[i]);
        out.branch[i].beta = add(bet_b[i], bet_f[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flat parameter registry: declaration order, with kernel-weight flags for
// the L2 rule. Gradients enumerate in the identical order.
// ---------------------------------------------------------------------------

template <typename T>
struct ParamRef {
    Tensor<T>* tensor;
    bool kernel_weight;  // true for conv kernels and dense weight matrices
    std::string name;
};

template <typename T>
std::vector<ParamRef<T>> trainable_params(SiameseNet<T>& net) {
    std::vector<ParamRef<T>> v;
    for (int i = 0; i < 3; ++i) {
        const std::string b = "branch" + std::to_string(i + 1);
        v.push_back({&net.branch[i].conv.kernels, true, b + ".conv.kernels"});
        v.push_back({&net.branch[i].conv.bias, false, b + ".conv.bias"});
        v.push_back({&net.branch[i].bn.gamma, false, b + ".bn.gamma"});
        v.push_back({&net.branch[i].bn.beta, false, b + ".bn.beta"});
    }
    v.push_back({&net.dense1.weights, true, "dense1.weights"});
    v.push_back({&net.dense1.bias, false, "dense1.bias"});
    v.push_back({&net.head_bn1.gamma, false, "head_bn1.gamma"});
    v.push_back({&net.head_bn1.beta, false, "head_bn1.beta"});
    v.push_back({&net.dense2.weights, true, "dense2.weights"});
    v.push_back({&net.dense2.bias, false, "dense2.bias"});
    v.push_back({&net.head_bn2.gamma, false, "head_bn2.gamma"});
    v.push_back({&net.head_bn2.beta, false, "head_bn2.beta"});
    v.push_back({&net.dense3.weights, true, "dense3.weights"});
    v.push_back({&net.dense3.bias, false, "dense3.bias"});
    return v;
}

template <typename T>
std::vector<Tensor<T>*> grad_tensors(SiameseGrads<T>& g) {
    std::vector<Tensor<T>*> v;
    for (int i = 0; i < 3; ++i) {
        v.push_back(&g.branch[i].kernels);
        v.push_back(&g.branch[i].conv_bias);
        v.push_back(&g.branch[i].gamma);
        v.push_back(&g.branch[i].beta);
    }
    v.push_back(&g.d1_w);
    v.push_back(&g.d1_b);
    v.push_back(&g.hb1_gamma);
    v.push_back(&g.hb1_beta);
    v.push_back(&g.d2_w);
    v.push_back(&g.d2_b);
    v.push_back(&g.hb2_gamma);
    v.push_back(&g.hb2_beta);
    v.push_back(&g.d3_w);
    v.push_back(&g.d3_b);
    return v;
}

/// Batch-norm running statistics: model state, saved in checkpoints but not
/// touched by the optimizer.
template <typename T>
std::vector<Tensor<T>*> state_tensors(SiameseNet<T>& net) {
    std::vector<Tensor<T>*> v;
    for (int i = 0; i < 3; ++i) {
        v.push_back(&net.branch[i].bn.running_mean);
        v.push_back(&net.branch[i].bn.running_var);
    }
    v.push_back(&net.head_bn1.running_mean);
    v.push_back(&net.head_bn1.running_var);
    v.push_back(&net.head_bn2.running_mean);
    v.push_back(&net.head_bn2.running_var);
    return v;
}

template <typename T>
int64_t parameter_count(SiameseNet<T>& net) {
    int64_t n = 0;
    for (const ParamRef<T>& p : trainable_params(net)) n += p.tensor->size();
    return n;
}

/// Infer-mode feature vectors for one analysis stage, one flat row per sample.
template <typename T>
Tensor<T> extract_features(const SiameseNet<T>& net, const Tensor<T>& baseline,
                           const Tensor<T>& followup, FeatureStage stage) {
    Rng rng(0);  // untouched in infer mode
    PairResult<T> r = forward_pair(net, baseline, followup, Mode::Infer, rng, true);
    switch (stage) {
        case FeatureStage::InputConcat: return std::move(r.taps.input_concat);
        case FeatureStage::BranchConcat: return std::move(r.taps.branch_concat);
        case FeatureStage::SubtractOut: return std::move(r.taps.subtract_out);
        case FeatureStage::Dense2Out: return std::move(r.taps.dense2_out);
    }
    throw std::logic_error("invalid feature stage");
}

// ---------------------------------------------------------------------------
// Checkpoint container (float nets): versioned binary, config then parameter
// tensors in declaration order, little-endian 32-bit floats.
// ---------------------------------------------------------------------------

void save_checkpoint(SiameseNet<float>& net, const std::string& path);
SiameseNet<float> load_checkpoint(const std::string& path);

}  // namespace longsiam
