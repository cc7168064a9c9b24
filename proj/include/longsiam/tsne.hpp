#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "longsiam/cohort.hpp"
#include "longsiam/model.hpp"
#include "longsiam/tensor.hpp"

namespace longsiam {

struct TsneConfig {
    double perplexity = 30;  // capped at (n−1)/3 for the actual point count
    int64_t iterations = 1000;
    double early_exaggeration = 12;
    int64_t exaggeration_iters = 250;
    double step_size = 200;
    double momentum_initial = 0.5;  // switches to momentum_final after exaggeration
    double momentum_final = 0.8;
    uint64_t seed = 0;

    void validate() const {
        if (perplexity < 2) throw std::invalid_argument("tsne: perplexity must be >= 2");
        if (iterations < 1) throw std::invalid_argument("tsne: iterations must be >= 1");
        if (early_exaggeration < 1 || step_size <= 0)
            throw std::invalid_argument("tsne: invalid exaggeration or step size");
    }
};

struct Embedding {
    TensorD coords;  // [n, 2]
    double final_kl = 0;
    double kl_post_exaggeration = 0;
    // Filled by embed_stages; empty for a plain tsne() call.
    std::vector<int> labels;
    std::vector<int> predicted;
    std::vector<uint8_t> correct;
};

/// Row-normalized conditional affinities p(j|i): per-point Gaussian bandwidth
/// binary-searched so each row's perplexity matches the target within 1e-4.
/// Exactly duplicated rows are perturbed with seeded jitter (1e-10) and a
/// warning goes to stderr.
TensorD conditional_affinities(const TensorD& vectors, double perplexity);

/// Symmetrized joint affinities P = (C + Cᵀ) / 2n; Σ_ij P_ij = 1.
TensorD input_affinities(const TensorD& vectors, double perplexity);

/// Exact O(n²) t-SNE to 2D: gradient descent on KL(P‖Q) with a Student-t
/// (df 1) low-dimensional kernel, early exaggeration then a plain phase.
/// Deterministic under cfg.seed.
Embedding tsne(const TensorD& vectors, const TsneConfig& cfg);

/// Fraction of points whose k nearest neighbors (self excluded, Euclidean,
/// ties by index) have a majority label equal to the point's own label.
double knn_purity(const TensorD& coords, const std::vector<int>& labels, int k = 5);

inline constexpr std::array<FeatureStage, 4> kAnalysisStages{
    FeatureStage::InputConcat, FeatureStage::BranchConcat, FeatureStage::SubtractOut,
    FeatureStage::Dense2Out};

/// Embeds the validation samples' features at the four analysis stages and
/// writes one CSV per stage (`<stage>.csv`, header x,y,label,predicted,
/// correct) into out_dir. Requires >= 10 samples.
std::array<Embedding, 4> embed_stages(const SiameseNet<float>& net, const Cohort& validation,
                                      const TsneConfig& cfg,
                                      const std::filesystem::path& out_dir);

}  // namespace longsiam
