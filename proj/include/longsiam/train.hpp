#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "longsiam/augment.hpp"
#include "longsiam/cohort.hpp"
#include "longsiam/model.hpp"
#include "longsiam/rng.hpp"
#include "longsiam/tensor.hpp"

namespace longsiam {

// ---------------------------------------------------------------------------
// Losses and metrics.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_prob_pair(const Tensor<T>& probs, const Tensor<T>& onehot) {
    if (probs.shape().rank() != 2 || probs.shape() != onehot.shape())
        throw std::invalid_argument("metrics: probs and onehot must share a [N,K] shape");
}

template <typename T>
void check_onehot(const Tensor<T>& onehot) {
    const int64_t N = onehot.shape()[0], K = onehot.shape()[1];
    for (int64_t n = 0; n < N; ++n) {
        T sum = 0;
        for (int64_t k = 0; k < K; ++k) {
            const T v = onehot[n * K + k];
            if (v != T(0) && v != T(1))
                throw std::invalid_argument("metrics: onehot entries must be exactly 0 or 1");
            sum += v;
        }
        if (sum != T(1)) throw std::invalid_argument("metrics: onehot rows must sum to 1");
    }
}

}  // namespace detail

inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

/// Mean over samples of −Σ_c y_c·ln(p_c), probabilities clamped to
/// [1e-7, 1−1e-7].
template <typename T>
T crossentropy(const Tensor<T>& probs, const Tensor<T>& onehot) {
    detail::check_prob_pair(probs, onehot);
    detail::check_onehot(onehot);
    const int64_t N = probs.shape()[0], K = probs.shape()[1];
    T total = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < K; ++k) {
            if (onehot[n * K + k] == T(0)) continue;
            T p = probs[n * K + k];
            p = std::min(std::max(p, static_cast<T>(kProbClampLo)), static_cast<T>(kProbClampHi));
            total -= onehot[n * K + k] * std::log(p);
        }
    return total / static_cast<T>(N);
}

/// d crossentropy / d probs. Zero where the clamp is active (the clamped loss
/// is locally constant there).
template <typename T>
Tensor<T> crossentropy_grad(const Tensor<T>& probs, const Tensor<T>& onehot) {
    detail::check_prob_pair(probs, onehot);
    detail::check_onehot(onehot);
    const int64_t N = probs.shape()[0], K = probs.shape()[1];
    Tensor<T> g = Tensor<T>::zeros(probs.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < K; ++k) {
            const T y = onehot[n * K + k];
            const T p = probs[n * K + k];
            if (y != T(0) && p > static_cast<T>(kProbClampLo) && p < static_cast<T>(kProbClampHi))
                g[n * K + k] = -y / (p * static_cast<T>(N));
        }
    return g;
}

/// Mean over samples and classes of (ln(1+p) − ln(1+y))².
template <typename T>
T msle(const Tensor<T>& probs, const Tensor<T>& onehot) {
    detail::check_prob_pair(probs, onehot);
    const int64_t n = probs.size();
    T total = 0;
    for (int64_t i = 0; i < n; ++i) {
        const T d = std::log1p(probs[i]) - std::log1p(onehot[i]);
        total += d * d;
    }
    return total / static_cast<T>(n);
}

/// Fraction of samples where argmax(probs) equals the label; argmax ties
/// resolve to the lower index.
template <typename T>
double accuracy(const Tensor<T>& probs, const std::vector<int>& labels) {
    const int64_t N = probs.shape()[0], K = probs.shape()[1];
    if (static_cast<int64_t>(labels.size()) != N)
        throw std::invalid_argument("accuracy: label count mismatch");
    int64_t hits = 0;
    for (int64_t n = 0; n < N; ++n) {
        int64_t best = 0;
        for (int64_t k = 1; k < K; ++k)
            if (probs[n * K + k] > probs[n * K + best]) best = k;
        if (best == labels[static_cast<size_t>(n)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(N);
}

template <typename T>
Tensor<T> onehot_labels(const std::vector<int>& labels, int64_t classes = 2) {
    const int64_t N = static_cast<int64_t>(labels.size());
    Tensor<T> out = Tensor<T>::zeros(Shape{N, classes});
    for (int64_t n = 0; n < N; ++n) {
        const int c = labels[static_cast<size_t>(n)];
        if (c < 0 || c >= classes) throw std::invalid_argument("onehot_labels: label out of range");
        out[n * classes + c] = T(1);
    }
    return out;
}

/// l2_coeff · Σ‖W‖² over kernel-weight tensors only (convolution kernels and
/// dense weight matrices; biases and normalization affines excluded).
template <typename T>
T l2_penalty(const std::vector<ParamRef<T>>& params, T l2_coeff) {
    T sum = 0;
    for (const ParamRef<T>& p : params) {
        if (!p.kernel_weight) continue;
        for (const T& w : *p.tensor) sum += w * w;
    }
    return l2_coeff * sum;
}

// ---------------------------------------------------------------------------
// Adam with decoupled-into-gradient L2 (g' = g + l2_coeff·θ on kernel
// weights only).
// ---------------------------------------------------------------------------

template <typename T>
struct AdamConfig {
    T learning_rate = static_cast<T>(0.001);
    T beta1 = static_cast<T>(0.9);
    T beta2 = static_cast<T>(0.999);
    T epsilon = static_cast<T>(1e-8);
    T l2_coeff = 0;
};

template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m, v;
    int64_t t = 0;
};

template <typename T>
AdamState<T> init_adam(const std::vector<ParamRef<T>>& params) {
    AdamState<T> st;
    for (const ParamRef<T>& p : params) {
        st.m.push_back(Tensor<T>::zeros(p.tensor->shape()));
        st.v.push_back(Tensor<T>::zeros(p.tensor->shape()));
    }
    return st;
}

template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, const std::vector<Tensor<T>*>& grads,
               AdamState<T>& st, const AdamConfig<T>& cfg) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw std::invalid_argument("adam_step: registry size mismatch");
    ++st.t;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(st.t));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(st.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& theta = *params[i].tensor;
        const Tensor<T>& grad = *grads[i];
        if (grad.shape() != theta.shape())
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[i].name);
        Tensor<T>& m = st.m[i];
        Tensor<T>& v = st.v[i];
        const bool decay = params[i].kernel_weight && cfg.l2_coeff != T(0);
        const int64_t n = theta.size();
        for (int64_t j = 0; j < n; ++j) {
            T g = grad[j];
            if (decay) g += cfg.l2_coeff * theta[j];
            m[j] = cfg.beta1 * m[j] + (T(1) - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (T(1) - cfg.beta2) * g * g;
            const T mhat = m[j] / bc1;
            const T vhat = v[j] / bc2;
            theta[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// Epoch loop and the 10-run random sub-sampling validation protocol.
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 0.001;
    int64_t epochs = 800;
    int64_t batch_size = 20;
    double l2_coeff = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int64_t n_runs = 10;
    int64_t val_count = 40;
    uint64_t seed = 0;
    bool augment_enabled = true;
    AugmentConfig augment;

    void validate() const {
        if (learning_rate <= 0) throw std::invalid_argument("train: learning_rate must be > 0");
        if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
        if (batch_size < 2)
            throw std::invalid_argument("train: batch_size must be >= 2 (batchnorm train mode)");
        if (n_runs < 1) throw std::invalid_argument("train: n_runs must be >= 1");
        if (val_count < 1) throw std::invalid_argument("train: val_count must be >= 1");
    }
};

struct EpochMetrics {
    double train_loss = 0, val_loss = 0;
    double train_acc = 0, val_acc = 0;
    double train_msle = 0, val_msle = 0;
};

/// Per-epoch curves of one run; reported losses include the L2 penalty term.
struct RunReport {
    std::vector<EpochMetrics> epochs;
    const EpochMetrics& final_epoch() const {
        if (epochs.empty()) throw std::logic_error("RunReport has no epochs");
        return epochs.back();
    }
};

/// Infer-mode class probabilities for every sample, batched in chunks.
TensorF infer_probs(const SiameseNet<float>& net, const Cohort& cohort, int64_t chunk_size = 32);

/// Trains `net` in place: per epoch, shuffle; per batch, augment each image,
/// forward in train mode, crossentropy + L2, backward, Adam; then record
/// infer-mode train/val metrics. A trailing batch of size 1 is skipped.
RunReport train_run(SiameseNet<float>& net, const Cohort& train_set, const Cohort& val_set,
                    const TrainConfig& cfg, Rng& rng);

struct RunOutcome {
    RunReport report;
    std::vector<int64_t> val_indices;  // sorted positions into the full cohort
};

struct ValidationSummary {
    std::vector<RunOutcome> runs;
    double train_acc_mean = 0, train_acc_std = 0, train_msle_mean = 0, train_msle_std = 0;
    double val_acc_mean = 0, val_acc_std = 0, val_msle_mean = 0, val_msle_std = 0;
    /// Final run's trained model, kept for downstream feature analysis.
    SiameseNet<float> last_net;
};

/// n_runs independent splits (val_count held out uniformly without
/// replacement), each trained from a fresh seeded build; summarizes the
/// final-epoch metrics as mean and population std across runs. `on_run` is
/// invoked after each run completes (progress reporting).
ValidationSummary subsampling_validation(
    const Cohort& cohort, const ModelConfig& mcfg, const TrainConfig& cfg,
    const std::function<void(int64_t, const RunOutcome&)>& on_run = nullptr);

// CSV serialization (headers documented in README).
std::string run_report_csv(const RunReport& report);
std::string summary_csv(const ValidationSummary& summary);
void write_run_report_csv(const std::filesystem::path& path, const RunReport& report);
void write_summary_csv(const std::filesystem::path& path, const ValidationSummary& summary);

}  // namespace longsiam
