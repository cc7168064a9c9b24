#include "longsiam/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "longsiam/io_util.hpp"
#include "longsiam/rng.hpp"
#include "longsiam/train.hpp"

namespace longsiam {

namespace {

// Pairwise squared Euclidean distances between rows.
TensorD squared_distances(const TensorD& x) {
    const int64_t n = x.shape()[0], d = x.shape()[1];
    TensorD out = TensorD::zeros(Shape{n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) {
            const double* a = x.data() + i * d;
            const double* b = x.data() + j * d;
            double s = 0;
            for (int64_t k = 0; k < d; ++k) {
                const double diff = a[k] - b[k];
                s += diff * diff;
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    return out;
}

// Shannon entropy (nats) and row of conditionals for a given precision beta.
double row_entropy(const double* d2, int64_t n, int64_t i, double beta, double* row) {
    double sum = 0;
    for (int64_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-d2[j] * beta);
        sum += row[j];
    }
    double h = 0;
    for (int64_t j = 0; j < n; ++j) {
        row[j] /= sum;
        if (row[j] > 0) h -= row[j] * std::log(row[j]);
    }
    return h;
}

double kl_divergence(const TensorD& p, const TensorD& y) {
    const int64_t n = y.shape()[0];
    double qsum = 0;
    TensorD w = TensorD::zeros(Shape{n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = y[i * 2] - y[j * 2];
            const double dy = y[i * 2 + 1] - y[j * 2 + 1];
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = v;
            qsum += v;
        }
    double kl = 0;
    for (int64_t i = 0; i < n * n; ++i) {
        if (p[i] <= 0) continue;
        const double q = w[i] / qsum;
        kl += p[i] * std::log(p[i] / q);
    }
    return kl;
}

}  // namespace

TensorD conditional_affinities(const TensorD& vectors, double perplexity) {
    if (vectors.shape().rank() != 2)
        throw std::invalid_argument("affinities: vectors must be [n, d]");
    const int64_t n = vectors.shape()[0];
    if (n < 3) throw std::invalid_argument("affinities: need at least 3 points");
    if (perplexity < 1 || perplexity > static_cast<double>(n - 1))
        throw std::invalid_argument("affinities: perplexity must lie in [1, n-1]");

    TensorD x = vectors;
    TensorD d2 = squared_distances(x);
    // Exact duplicates give the binary search nothing to resolve; nudge them.
    bool jittered = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<int64_t> dupes;
        for (int64_t j = 1; j < n; ++j)
            for (int64_t i = 0; i < j; ++i)
                if (d2[i * n + j] == 0.0) {
                    dupes.push_back(j);
                    break;
                }
        if (dupes.empty()) break;
        if (!jittered) {
            std::fprintf(stderr,
                         "warning: %zu duplicate point(s) perturbed with 1e-10 jitter\n",
                         dupes.size());
            jittered = true;
        }
        Rng rng(0xD1D1u + static_cast<uint64_t>(attempt));
        const int64_t d = x.shape()[1];
        for (int64_t j : dupes)
            for (int64_t k = 0; k < d; ++k) x[j * d + k] += 1e-10 * rng.normal();
        d2 = squared_distances(x);
    }

    const double target_h = std::log(perplexity);  // perplexity = e^H with H in nats
    TensorD cond = TensorD::zeros(Shape{n, n});
    std::vector<double> row(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double h = 0;
        for (int iter = 0; iter < 200; ++iter) {
            h = row_entropy(d2.data() + i * n, n, i, beta, row.data());
            // |perp − target| <= 1e-4 in perplexity units
            if (std::abs(std::exp(h) - perplexity) <= 1e-4) break;
            if (h > target_h) {  // too diffuse: raise precision
                lo = beta;
                beta = std::isinf(hi) ? beta * 2 : (lo + hi) / 2;
            } else {
                hi = beta;
                beta = (lo + hi) / 2;
            }
        }
        for (int64_t j = 0; j < n; ++j) cond[i * n + j] = row[static_cast<size_t>(j)];
    }
    return cond;
}

TensorD input_affinities(const TensorD& vectors, double perplexity) {
    TensorD cond = conditional_affinities(vectors, perplexity);
    const int64_t n = cond.shape()[0];
    TensorD p = TensorD::zeros(Shape{n, n});
    const double norm = 1.0 / (2.0 * static_cast<double>(n));
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j)
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) * norm;
    return p;
}

Embedding tsne(const TensorD& vectors, const TsneConfig& cfg) {
    cfg.validate();
    const int64_t n = vectors.shape()[0];
    const double perplexity =
        std::min(cfg.perplexity, static_cast<double>(n - 1) / 3.0);
    const TensorD p = input_affinities(vectors, perplexity);

    Rng rng(derive_seed(cfg.seed, 0x7513));
    TensorD y = TensorD::zeros(Shape{n, 2});
    for (double& v : y) v = 1e-4 * rng.normal();
    TensorD vel = TensorD::zeros(Shape{n, 2});
    TensorD w = TensorD::zeros(Shape{n, n});
    TensorD grad = TensorD::zeros(Shape{n, 2});

    Embedding emb;
    emb.kl_post_exaggeration = std::numeric_limits<double>::quiet_NaN();
    for (int64_t t = 0; t < cfg.iterations; ++t) {
        const bool exaggerated = t < cfg.exaggeration_iters;
        const double p_scale = exaggerated ? cfg.early_exaggeration : 1.0;
        const double momentum = exaggerated ? cfg.momentum_initial : cfg.momentum_final;

        double qsum = 0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double dx = y[i * 2] - y[j * 2];
                const double dy = y[i * 2 + 1] - y[j * 2 + 1];
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                w[i * n + j] = v;
                qsum += v;
            }
        for (int64_t i = 0; i < n; ++i) {
            double gx = 0, gy = 0;
            for (int64_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double wij = w[i * n + j];
                const double coeff = (p_scale * p[i * n + j] - wij / qsum) * wij;
                gx += coeff * (y[i * 2] - y[j * 2]);
                gy += coeff * (y[i * 2 + 1] - y[j * 2 + 1]);
            }
            grad[i * 2] = 4 * gx;
            grad[i * 2 + 1] = 4 * gy;
        }
        for (int64_t i = 0; i < 2 * n; ++i) {
            vel[i] = momentum * vel[i] - cfg.step_size * grad[i];
            y[i] += vel[i];
        }
        // Re-center so the embedding does not drift.
        double mx = 0, my = 0;
        for (int64_t i = 0; i < n; ++i) {
            mx += y[i * 2];
            my += y[i * 2 + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) {
            y[i * 2] -= mx;
            y[i * 2 + 1] -= my;
        }
        if (t + 1 == cfg.exaggeration_iters) emb.kl_post_exaggeration = kl_divergence(p, y);
    }

    emb.coords = std::move(y);
    emb.final_kl = kl_divergence(p, emb.coords);
    if (std::isnan(emb.kl_post_exaggeration)) emb.kl_post_exaggeration = emb.final_kl;
    return emb;
}

double knn_purity(const TensorD& coords, const std::vector<int>& labels, int k) {
    const int64_t n = coords.shape()[0];
    if (static_cast<int64_t>(labels.size()) != n)
        throw std::invalid_argument("knn_purity: label count mismatch");
    if (k < 1 || k >= n) throw std::invalid_argument("knn_purity: k out of range");
    int64_t pure = 0;
    std::vector<std::pair<double, int64_t>> dist(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            const double dx = coords[i * 2] - coords[j * 2];
            const double dy = coords[i * 2 + 1] - coords[j * 2 + 1];
            dist[static_cast<size_t>(j)] = {dx * dx + dy * dy, j};
        }
        dist[static_cast<size_t>(i)].first = std::numeric_limits<double>::infinity();
        std::sort(dist.begin(), dist.end());
        std::vector<int64_t> votes;
        for (int v = 0; v < k; ++v) {
            const int label = labels[static_cast<size_t>(dist[static_cast<size_t>(v)].second)];
            if (label >= static_cast<int>(votes.size())) votes.resize(label + 1, 0);
            ++votes[static_cast<size_t>(label)];
        }
        int64_t majority = 0;
        for (size_t c = 1; c < votes.size(); ++c)
            if (votes[c] > votes[static_cast<size_t>(majority)])
                majority = static_cast<int64_t>(c);
        if (majority == labels[static_cast<size_t>(i)]) ++pure;
    }
    return static_cast<double>(pure) / static_cast<double>(n);
}

std::array<Embedding, 4> embed_stages(const SiameseNet<float>& net, const Cohort& validation,
                                      const TsneConfig& cfg,
                                      const std::filesystem::path& out_dir) {
    cfg.validate();
    const int64_t n = validation.size();
    if (n < 10) throw std::invalid_argument("embed_stages: need at least 10 validation samples");
    std::filesystem::create_directories(out_dir);

    std::vector<int64_t> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const TensorF bb = gather_volumes(validation, all, false);
    const TensorF fb = gather_volumes(validation, all, true);
    const std::vector<int> labels = gather_labels(validation, all);
    const TensorF probs = infer_probs(net, validation);

    std::array<Embedding, 4> out;
    for (size_t s = 0; s < kAnalysisStages.size(); ++s) {
        const TensorF feat = extract_features(net, bb, fb, kAnalysisStages[s]);
        TensorD vecs = TensorD::zeros(feat.shape());
        for (int64_t i = 0; i < feat.size(); ++i) vecs[i] = static_cast<double>(feat[i]);

        TsneConfig stage_cfg = cfg;
        stage_cfg.seed = derive_seed(cfg.seed, 0xE0 + static_cast<uint64_t>(s));
        Embedding emb = tsne(vecs, stage_cfg);
        emb.labels = labels;
        emb.predicted.resize(static_cast<size_t>(n));
        emb.correct.resize(static_cast<size_t>(n));
        std::ostringstream csv;
        csv << "x,y,label,predicted,correct\n";
        for (int64_t i = 0; i < n; ++i) {
            const int pred = probs[i * 2 + 1] > probs[i * 2] ? 1 : 0;
            emb.predicted[static_cast<size_t>(i)] = pred;
            emb.correct[static_cast<size_t>(i)] = pred == labels[static_cast<size_t>(i)];
            csv << format_number(emb.coords[i * 2]) << ',' << format_number(emb.coords[i * 2 + 1])
                << ',' << labels[static_cast<size_t>(i)] << ',' << pred << ','
                << int(emb.correct[static_cast<size_t>(i)]) << '\n';
        }
        atomic_write_file(out_dir / (std::string(feature_stage_name(kAnalysisStages[s])) + ".csv"),
                          csv.str());
        out[s] = std::move(emb);
    }
    return out;
}

}  // namespace longsiam
