// Acceptance runner: executes the ten release criteria and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
// Tolerances are pinned in code next to each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "longsiam/cohort.hpp"
#include "longsiam/io_util.hpp"
#include "longsiam/layers.hpp"
#include "longsiam/model.hpp"
#include "longsiam/nifti.hpp"
#include "longsiam/preprocess.hpp"
#include "longsiam/rng.hpp"
#include "longsiam/synth.hpp"
#include "longsiam/tensor.hpp"
#include "longsiam/train.hpp"
#include "longsiam/tsne.hpp"

using namespace longsiam;
namespace fs = std::filesystem;

namespace {

using TD = Tensor<double>;

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    std::string name;
    bool pass = true;
    std::vector<std::string> notes;
    double seconds = 0;

    void expect(bool ok, const std::string& msg) {
        if (ok) return;
        pass = false;
        if (notes.size() < 8) notes.push_back(msg);
    }
    void note(const std::string& msg) {
        if (notes.size() < 8) notes.push_back(msg);
    }
};

double now_seconds() {
    static const auto start = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const Criterion& c) {
    std::printf("criterion %d: %s — %s (%.1fs)\n", c.id, c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.seconds);
    for (const std::string& n : c.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) { return format_number(v); }

// ---------------------------------------------------------------------------
// Shared numeric helpers (mirroring the unit-test oracles)
// ---------------------------------------------------------------------------

TD random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TD t = TD::zeros(s);
    for (double& v : t) v = rng.uniform(lo, hi);
    return t;
}

int64_t randint(Rng& rng, int64_t lo, int64_t hi) {  // inclusive
    return lo + rng.uniform_int(hi - lo + 1);
}

double project(const TD& y, const TD& r) {
    double s = 0;
    for (int64_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
}

double fd(const std::function<double()>& f, double& slot) {
    const double h = 1e-5;  // central difference, double precision
    const double orig = slot;
    slot = orig + h;
    const double fp = f();
    slot = orig - h;
    const double fm = f();
    slot = orig;
    return (fp - fm) / (2 * h);
}

// Per-layer gradient tolerance: 1e-4 relative with a 1e-2 magnitude floor.
bool grad_ok(double analytic, double numeric) {
    const double tol = 1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-2});
    return std::abs(analytic - numeric) <= tol;
}

// Direct translation of the convolution definition: six loops over output
// coordinates and kernel taps, zero padding outside the volume.
TD conv_oracle(const TD& x, const Conv3dParams<double>& p) {
    const int64_t N = x.shape()[0], C = x.shape()[1];
    const int64_t D = x.shape()[2], H = x.shape()[3], W = x.shape()[4];
    const int64_t F = p.out_channels();
    TD y = TD::zeros(Shape{N, F, D, H, W});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f)
            for (int64_t zo = 0; zo < D; ++zo)
                for (int64_t yo = 0; yo < H; ++yo)
                    for (int64_t xo = 0; xo < W; ++xo) {
                        double acc = p.bias[f];
                        for (int64_t c = 0; c < C; ++c)
                            for (int kd = 0; kd < 3; ++kd)
                                for (int kh = 0; kh < 3; ++kh)
                                    for (int kw = 0; kw < 3; ++kw) {
                                        const int64_t zi = zo + kd - 1;
                                        const int64_t yi = yo + kh - 1;
                                        const int64_t xi = xo + kw - 1;
                                        if (zi < 0 || zi >= D || yi < 0 || yi >= H ||
                                            xi < 0 || xi >= W)
                                            continue;
                                        acc += p.kernels[(((f * C + c) * 3 + kd) * 3 + kh) * 3 +
                                                         kw] *
                                               x[(((n * C + c) * D + zi) * H + yi) * W + xi];
                                    }
                        y[(((n * F + f) * D + zo) * H + yo) * W + xo] = acc;
                    }
    return y;
}

Conv3dParams<double> random_conv(int64_t F, int64_t C, Rng& rng) {
    return Conv3dParams<double>{random_tensor(Shape{F, C, 3, 3, 3}, rng),
                                random_tensor(Shape{F}, rng)};
}

Volume random_volume(Rng& rng, int64_t lo = 3, int64_t hi = 12) {
    Volume v = make_volume(randint(rng, lo, hi), randint(rng, lo, hi), randint(rng, lo, hi),
                           {static_cast<float>(rng.uniform(0.5, 3.0)),
                            static_cast<float>(rng.uniform(0.5, 3.0)),
                            static_cast<float>(rng.uniform(0.5, 3.0))});
    for (float& x : v.intensities) x = static_cast<float>(rng.uniform(-10.0, 10.0));
    return v;
}

// ---------------------------------------------------------------------------
// Criterion 1: per-layer and whole-model gradients vs finite differences
// ---------------------------------------------------------------------------

void layer_fd_conv(Criterion& c) {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t N = randint(rng, 1, 2), C = randint(rng, 1, 2), F = randint(rng, 1, 2);
        const int64_t D = randint(rng, 1, 3), H = randint(rng, 1, 3), W = randint(rng, 1, 3);
        TD x = random_tensor(Shape{N, C, D, H, W}, rng);
        Conv3dParams<double> p = random_conv(F, C, rng);
        const TD r = random_tensor(Shape{N, F, D, H, W}, rng);
        const auto [y, tape] = conv3d_forward(x, p);
        const Conv3dGrads<double> g = conv3d_backward(r, tape, p);
        const auto loss = [&] { return project(conv3d_forward(x, p).first, r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g.x[i], fd(loss, x[i])), "conv grad_x mismatch");
        for (int64_t i = 0; i < p.kernels.size(); ++i)
            c.expect(grad_ok(g.kernels[i], fd(loss, p.kernels[i])), "conv grad_kernels mismatch");
        for (int64_t i = 0; i < p.bias.size(); ++i)
            c.expect(grad_ok(g.bias[i], fd(loss, p.bias[i])), "conv grad_bias mismatch");
    }
}

void layer_fd_batchnorm(Criterion& c) {
    Rng rng(808);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t N = randint(rng, 2, 4), C = randint(rng, 1, 3);
        const int64_t S = randint(rng, 4, 8);
        const Shape shape = rep % 2 == 0 ? Shape{N, C, S} : Shape{N, C, 1, S, 1};
        BatchNormParams<double> p = init_batchnorm<double>(C);
        for (int64_t ch = 0; ch < C; ++ch) {
            p.gamma[ch] = rng.uniform(0.5, 1.5);
            p.beta[ch] = rng.uniform(-0.5, 0.5);
        }
        TD x;
        for (;;) {  // keep batch variance healthy: degenerate variance explodes curvature
            x = random_tensor(shape, rng);
            const auto probe = batchnorm_forward(x, p, Mode::Train);
            double lo = 1e30;
            for (int64_t ch = 0; ch < C; ++ch) lo = std::min(lo, probe.second.batch_var[ch]);
            if (lo >= 0.05) break;
        }
        const TD r = random_tensor(shape, rng);
        const auto [y, tape] = batchnorm_forward(x, p, Mode::Train);
        const BatchNormGrads<double> g = batchnorm_backward(r, tape, p);
        const auto loss = [&] { return project(batchnorm_forward(x, p, Mode::Train).first, r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g.x[i], fd(loss, x[i])), "batchnorm grad_x mismatch");
        for (int64_t ch = 0; ch < C; ++ch) {
            c.expect(grad_ok(g.gamma[ch], fd(loss, p.gamma[ch])), "batchnorm grad_gamma mismatch");
            c.expect(grad_ok(g.beta[ch], fd(loss, p.beta[ch])), "batchnorm grad_beta mismatch");
        }
    }
}

void layer_fd_dense(Criterion& c) {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t N = randint(rng, 1, 4), I = randint(rng, 1, 5), O = randint(rng, 1, 4);
        TD x = random_tensor(Shape{N, I}, rng);
        DenseParams<double> p{random_tensor(Shape{I, O}, rng), random_tensor(Shape{O}, rng)};
        const TD r = random_tensor(Shape{N, O}, rng);
        const auto [y, tape] = dense_forward(x, p);
        const DenseGrads<double> g = dense_backward(r, tape, p);
        const auto loss = [&] { return project(dense_forward(x, p).first, r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g.x[i], fd(loss, x[i])), "dense grad_x mismatch");
        for (int64_t i = 0; i < p.weights.size(); ++i)
            c.expect(grad_ok(g.weights[i], fd(loss, p.weights[i])), "dense grad_w mismatch");
        for (int64_t i = 0; i < p.bias.size(); ++i)
            c.expect(grad_ok(g.bias[i], fd(loss, p.bias[i])), "dense grad_b mismatch");
    }
}

void layer_fd_avgpool(Criterion& c) {
    Rng rng(747);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t N = randint(rng, 1, 2), C = randint(rng, 1, 2);
        const int64_t D = randint(rng, 2, 5), H = randint(rng, 2, 5), W = randint(rng, 2, 5);
        TD x = random_tensor(Shape{N, C, D, H, W}, rng);
        const auto [y, tape] = avgpool3d_forward(x);
        const TD r = random_tensor(y.shape(), rng);
        const TD g = avgpool3d_backward(r, tape);
        const auto loss = [&] { return project(avgpool3d_forward(x).first, r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g[i], fd(loss, x[i])), "avgpool grad mismatch");
    }
}

void layer_fd_leaky_relu(Criterion& c) {
    Rng rng(555);
    for (int rep = 0; rep < 20; ++rep) {
        const double alpha = rep % 2 == 0 ? 0.01 : 0.3;
        TD x = random_tensor(Shape{randint(rng, 2, 4), randint(rng, 2, 4)}, rng);
        for (double& v : x)  // stay clear of the kink at 0
            while (std::abs(v) < 0.05) v = rng.uniform(-1.0, 1.0);
        const TD r = random_tensor(x.shape(), rng);
        const TD y = leaky_relu(x, alpha);
        const TD g = leaky_relu_backward(r, y, alpha);
        const auto loss = [&] { return project(leaky_relu(x, alpha), r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g[i], fd(loss, x[i])), "leaky_relu grad mismatch");
    }
}

void layer_fd_dropout(Criterion& c) {
    for (uint64_t rep = 0; rep < 20; ++rep) {
        Rng data_rng(900 + rep);
        TD x = random_tensor(Shape{3, 6}, data_rng);
        const TD r = random_tensor(x.shape(), data_rng);
        const double rate = 0.4;
        // Freeze the mask by re-seeding the generator before every evaluation.
        const auto forward = [&] {
            Rng rng(1234 + rep);
            return dropout(x, rate, Mode::Train, rng).first;
        };
        Rng rng(1234 + rep);
        const auto [y, mask] = dropout(x, rate, Mode::Train, rng);
        const TD g = dropout_backward(r, mask, rate);
        const auto loss = [&] { return project(forward(), r); };
        for (int64_t i = 0; i < x.size(); ++i)
            c.expect(grad_ok(g[i], fd(loss, x[i])), "dropout grad mismatch");
    }
}

void whole_model_fd(Criterion& c) {
    // Tiny config, tolerance 1e-3 relative with the same 1e-2 floor.
    for (const uint64_t seed : {3ull, 13ull}) {
        ModelConfig tiny;
        tiny.input_shape = Shape{8, 8, 8};
        tiny.block_filters = {2, 2, 3};
        tiny.dense_widths = {5, 4, 2};
        tiny.dropout_rate = 0.0;
        tiny.seed = seed;
        auto net = build<double>(tiny);

        Rng unused(0);
        TD base, foll, r;
        bool found = false;
        for (uint64_t probe = 0; probe < 50 && !found; ++probe) {
            Rng rng(derive_seed(seed, probe));
            base = TD::zeros(Shape{4, 8, 8, 8});
            foll = TD::zeros(Shape{4, 8, 8, 8});
            const int64_t V = 8 * 8 * 8;
            for (int64_t n = 0; n < 4; ++n) {
                // Per-sample intensity scales keep the head batch variance
                // healthy with only three fused features.
                const double sb = 0.4 + 0.4 * double(n);
                const double sf = 1.6 - 0.4 * double(n);
                for (int64_t i = 0; i < V; ++i) base[n * V + i] = sb * rng.uniform();
                for (int64_t i = 0; i < V; ++i) foll[n * V + i] = sf * rng.uniform();
            }
            r = TD::zeros(Shape{4, 2});
            for (double& v : r) v = rng.uniform(-1.0, 1.0);
            const auto res = forward_pair(net, base, foll, Mode::Train, unused);
            double lo = 1e30;
            for (int64_t ch = 0; ch < res.tapes.hb1.batch_var.size(); ++ch)
                lo = std::min(lo, res.tapes.hb1.batch_var[ch]);
            for (int64_t ch = 0; ch < res.tapes.hb2.batch_var.size(); ++ch)
                lo = std::min(lo, res.tapes.hb2.batch_var[ch]);
            found = lo >= 0.01;
        }
        c.expect(found, "no healthy-variance probe batch found");
        if (!found) continue;

        const auto res = forward_pair(net, base, foll, Mode::Train, unused);
        auto grads = backward_pair(net, res.tapes, r);
        auto params = trainable_params(net);
        auto gtens = grad_tensors(grads);
        const auto loss = [&] {
            Rng nop(0);
            return project(forward_pair(net, base, foll, Mode::Train, nop, false).probs, r);
        };
        for (size_t t = 0; t < params.size(); ++t)
            for (int64_t i = 0; i < params[t].tensor->size(); ++i) {
                const double analytic = (*gtens[t])[i];
                const double numeric = fd(loss, (*params[t].tensor)[i]);
                const double tol = 1e-3 * std::max({std::abs(analytic), std::abs(numeric), 1e-2});
                c.expect(std::abs(analytic - numeric) <= tol,
                         "whole-model grad mismatch at " + params[t].name);
            }
    }
}

Criterion criterion_1() {
    Criterion c{1, "layer and whole-model gradients match finite differences"};
    const double t0 = now_seconds();
    layer_fd_conv(c);
    layer_fd_batchnorm(c);
    layer_fd_dense(c);
    layer_fd_avgpool(c);
    layer_fd_leaky_relu(c);
    layer_fd_dropout(c);
    whole_model_fd(c);
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 2: convolution forward vs the six-loop oracle
// ---------------------------------------------------------------------------

Criterion criterion_2() {
    Criterion c{2, "conv3d forward matches the direct oracle on 50 cases"};
    const double t0 = now_seconds();
    Rng rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const int64_t N = randint(rng, 1, 2), C = randint(rng, 1, 3), F = randint(rng, 1, 3);
        const int64_t D = randint(rng, 1, 5), H = randint(rng, 1, 5), W = randint(rng, 1, 5);
        const TD x = random_tensor(Shape{N, C, D, H, W}, rng);
        const Conv3dParams<double> p = random_conv(F, C, rng);
        const auto [y, tape] = conv3d_forward(x, p);
        c.expect(max_abs_diff(y, conv_oracle(x, p)) <= 1e-10, "conv oracle deviation > 1e-10");
    }
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 3: shape contract of the default configuration
// ---------------------------------------------------------------------------

Criterion criterion_3() {
    Criterion c{3, "default stage shapes 4x51x54x37 / 8x25x27x18 / 16x12x13x9, flatten 22464"};
    const double t0 = now_seconds();
    const ModelConfig cfg;  // defaults: 102x108x75, filters {4, 8, 16}
    c.expect(cfg.input_shape == Shape{102, 108, 75}, "default input shape changed");
    c.expect(cfg.block_filters[0] == 4 && cfg.block_filters[1] == 8 && cfg.block_filters[2] == 16,
             "default filter counts changed");
    c.expect(cfg.stage_spatial(0) == Shape{51, 54, 37}, "stage 1 spatial mismatch");
    c.expect(cfg.stage_spatial(1) == Shape{25, 27, 18}, "stage 2 spatial mismatch");
    c.expect(cfg.stage_spatial(2) == Shape{12, 13, 9}, "stage 3 spatial mismatch");
    c.expect(cfg.flatten_size() == 22464, "flatten size mismatch");
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 4: siamese invariants and checkpoint byte-identity
// ---------------------------------------------------------------------------

Criterion criterion_4() {
    Criterion c{4, "siamese zero/negation invariants; checkpoints byte-identical"};
    const double t0 = now_seconds();
    ModelConfig mc;
    mc.input_shape = Shape{16, 16, 16};
    mc.block_filters = {2, 3, 4};
    mc.dense_widths = {8, 4, 2};
    mc.seed = 41;
    auto net = build<float>(mc);

    Rng rng(7);
    const int64_t V = 16 * 16 * 16;
    TensorF a = TensorF::zeros(Shape{3, 16, 16, 16});
    TensorF b = TensorF::zeros(Shape{3, 16, 16, 16});
    for (int64_t i = 0; i < 3 * V; ++i) a[i] = static_cast<float>(rng.uniform());
    for (int64_t i = 0; i < 3 * V; ++i) b[i] = static_cast<float>(rng.uniform());

    Rng unused(0);
    // Identical pairs: the fused difference is exactly zero.
    const auto same = forward_pair(net, a, a, Mode::Infer, unused);
    for (int64_t i = 0; i < same.taps.subtract_out.size(); ++i)
        c.expect(same.taps.subtract_out[i] == 0.0f, "identical pair subtract nonzero");

    // Swapped pairs: the fused difference negates exactly.
    const auto fwd = forward_pair(net, a, b, Mode::Infer, unused);
    const auto rev = forward_pair(net, b, a, Mode::Infer, unused);
    for (int64_t i = 0; i < fwd.taps.subtract_out.size(); ++i)
        c.expect(fwd.taps.subtract_out[i] == -rev.taps.subtract_out[i],
                 "swapped pair subtract not negated");

    // Checkpoint: save -> load -> save is byte-identical and reloads to
    // identical inference outputs.
    const fs::path dir = fs::temp_directory_path() / "acceptance_ckpt";
    fs::create_directories(dir);
    const fs::path p1 = dir / "net_a.ckpt", p2 = dir / "net_b.ckpt";
    save_checkpoint(net, p1.string());
    auto loaded = load_checkpoint(p1.string());
    save_checkpoint(loaded, p2.string());
    c.expect(read_file_bytes(p1) == read_file_bytes(p2), "checkpoint bytes differ after reload");
    const auto redo = forward_pair(loaded, a, b, Mode::Infer, unused);
    c.expect(redo.probs == fwd.probs, "reloaded checkpoint inference differs");
    fs::remove_all(dir);
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 5: spline downscale exactness
// ---------------------------------------------------------------------------

Criterion criterion_5() {
    Criterion c{5, "downscale_spline reproduces cubics within 1e-6, constants exactly"};
    const double t0 = now_seconds();
    for (float value : {0.0f, 1.0f, -2.5f, 0.625f}) {
        Volume v = make_volume(10, 7, 5);
        for (float& x : v.intensities) x = value;
        const Volume out = downscale_spline(v);
        for (float x : out.intensities)
            c.expect(x == value, "constant not reproduced exactly");
    }

    const int64_t nx = 40, ny = 36, nz = 44;
    const auto px = [](double x) {
        const double t = (x - 20.0) / 20.0;
        return t * t * t - 0.5 * t + 0.25;
    };
    const auto py = [](double y) {
        const double t = (y - 18.0) / 18.0;
        return 0.5 * t * t + t - 0.125;
    };
    const auto pz = [](double z) {
        const double t = (z - 22.0) / 22.0;
        return t * t * t - t * t + 0.5;
    };
    Volume v = make_volume(nx, ny, nz);
    for (int64_t x = 0; x < nx; ++x)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t z = 0; z < nz; ++z)
                v.at(x, y, z) = static_cast<float>(px(double(x)) * py(double(y)) * pz(double(z)));
    const Volume out = downscale_spline(v);
    const int64_t margin = 7;  // clear of the mirror-boundary transient
    for (int64_t i = margin; i < out.nx() - margin; ++i)
        for (int64_t j = margin; j < out.ny() - margin; ++j)
            for (int64_t k = margin; k < out.nz() - margin; ++k) {
                const double expect = px(double(2 * i)) * py(double(2 * j)) * pz(double(2 * k));
                c.expect(std::abs(out.at(i, j, k) - expect) <=
                             1e-6 * std::max(1.0, std::abs(expect)),
                         "cubic polynomial deviation > 1e-6");
            }
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 6: NIfTI round-trip
// ---------------------------------------------------------------------------

Criterion criterion_6() {
    Criterion c{6, "100 NIfTI round-trips voxel-identical, incl. byte-swapped read"};
    const double t0 = now_seconds();
    Rng rng(2024);
    for (int i = 0; i < 100; ++i) {
        const Volume v = random_volume(rng);
        const Volume back = parse_nifti(serialize_nifti(v));
        c.expect(back == v, "round-trip volume differs");
    }

    // Byte-swapped header and payload must parse to the same volume.
    const Volume v = random_volume(rng);
    std::vector<uint8_t> bytes = serialize_nifti(v);
    const auto swap_at = [&](size_t offset, size_t width, size_t count) {
        for (size_t i = 0; i < count; ++i)
            std::reverse(bytes.begin() + static_cast<ptrdiff_t>(offset + i * width),
                         bytes.begin() + static_cast<ptrdiff_t>(offset + (i + 1) * width));
    };
    swap_at(0, 4, 1);    // sizeof_hdr
    swap_at(40, 2, 8);   // dim
    swap_at(70, 2, 1);   // datatype
    swap_at(72, 2, 1);   // bitpix
    swap_at(76, 4, 8);   // pixdim
    swap_at(108, 4, 1);  // vox_offset
    swap_at(112, 4, 1);  // scl_slope
    swap_at(116, 4, 1);  // scl_inter
    swap_at(352, 4, static_cast<size_t>(v.intensities.size()));
    c.expect(parse_nifti(bytes) == v, "byte-swapped parse differs");
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 7 (+8, +10 analog): desk-scale end-to-end validation
// ---------------------------------------------------------------------------

struct HeavyArtifacts {
    Cohort cohort;              // default-signal desk cohort
    ValidationSummary summary;  // its 10-run validation summary
    bool trained = false;
};

TrainConfig desk_train_config() {
    TrainConfig tc;  // defaults: lr 0.001, batch 20, l2 1e-4, augment on
    tc.epochs = 100;
    tc.n_runs = 10;
    tc.val_count = 40;
    tc.seed = 0;
    return tc;
}

Criterion criterion_7(HeavyArtifacts& heavy) {
    Criterion c{7, "desk-scale 10-run validation: acc >= 0.90, MSLE <= 0.06, null in 0.5 +- 0.15"};
    const double t0 = now_seconds();

    const CohortSpec spec = CohortSpec::desk();  // 32x32x24, 134 + 113 pairs
    ModelConfig mc;
    mc.input_shape = spec.volume_shape;
    const TrainConfig tc = desk_train_config();

    const auto progress = [&](const char* tag) {
        return [tag, &c, t0](int64_t run, const RunOutcome& out) {
            const EpochMetrics& last = out.report.final_epoch();
            std::printf("    [criterion 7] %s run %lld/10: val acc %.3f msle %.4f (%.0fs)\n", tag,
                        static_cast<long long>(run + 1), last.val_acc, last.val_msle,
                        now_seconds() - t0);
            std::fflush(stdout);
        };
    };

    heavy.cohort = generate_cohort(spec);
    c.expect(heavy.cohort.samples.size() == 247, "default desk cohort is not 247 pairs");
    heavy.summary = subsampling_validation(heavy.cohort, mc, tc, progress("signal"));
    heavy.trained = true;
    c.note("signal: val acc mean " + fmt(heavy.summary.val_acc_mean) + " std " +
           fmt(heavy.summary.val_acc_std) + ", val MSLE mean " + fmt(heavy.summary.val_msle_mean));
    c.expect(heavy.summary.val_acc_mean >= 0.90, "signal validation accuracy mean below 0.90");
    c.expect(heavy.summary.val_msle_mean <= 0.06, "signal validation MSLE mean above 0.06");

    const Cohort null_cohort = generate_cohort(spec.null_control());
    const ValidationSummary null_summary =
        subsampling_validation(null_cohort, mc, tc, progress("null"));
    c.note("null: val acc mean " + fmt(null_summary.val_acc_mean) + " std " +
           fmt(null_summary.val_acc_std));
    c.expect(std::abs(null_summary.val_acc_mean - 0.5) <= 0.15,
             "null-control accuracy outside 0.5 +- 0.15");

    c.seconds = now_seconds() - t0;
    c.note("runtime " + fmt(c.seconds) + "s on this host (target < 60 min on 8 cores)");
    return c;
}

Criterion criterion_8(const HeavyArtifacts& heavy) {
    Criterion c{8, "training loss descends overall and plateaus over the last 10 epochs"};
    const double t0 = now_seconds();
    if (!heavy.trained) {
        c.expect(false, "criterion 7 artifacts unavailable");
        c.seconds = now_seconds() - t0;
        return c;
    }
    const int64_t epochs = static_cast<int64_t>(heavy.summary.runs[0].report.epochs.size());
    std::vector<double> mean_loss(static_cast<size_t>(epochs), 0.0);
    for (const RunOutcome& run : heavy.summary.runs)
        for (int64_t e = 0; e < epochs; ++e)
            mean_loss[static_cast<size_t>(e)] += run.report.epochs[static_cast<size_t>(e)].train_loss;
    for (double& v : mean_loss) v /= static_cast<double>(heavy.summary.runs.size());

    c.note("mean train loss: epoch 1 " + fmt(mean_loss.front()) + ", epoch " +
           std::to_string(epochs) + " " + fmt(mean_loss.back()));
    c.expect(mean_loss.back() < mean_loss.front(), "final mean loss not below epoch-1 loss");

    // Plateau: the last-10-epoch mean differs from the preceding-10-epoch mean
    // by < 5% relative.
    double last10 = 0, prev10 = 0;
    for (int64_t e = epochs - 10; e < epochs; ++e) last10 += mean_loss[static_cast<size_t>(e)];
    for (int64_t e = epochs - 20; e < epochs - 10; ++e) prev10 += mean_loss[static_cast<size_t>(e)];
    last10 /= 10;
    prev10 /= 10;
    const double rel_change = std::abs(last10 - prev10) / prev10;
    c.note("plateau relative change " + fmt(rel_change));
    c.expect(rel_change < 0.05, "no plateau: last-10-epoch mean change >= 5%");
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 9: metric closed forms
// ---------------------------------------------------------------------------

Criterion criterion_9() {
    Criterion c{9, "crossentropy(uniform) = ln 2; MSLE(total miss) = ln^2 2"};
    const double t0 = now_seconds();
    TD uniform = TD::zeros(Shape{1, 2});
    uniform[0] = 0.5;
    uniform[1] = 0.5;
    TD truth = TD::zeros(Shape{1, 2});
    truth[0] = 1.0;
    const double ce = crossentropy(uniform, truth);
    c.expect(std::abs(ce - std::log(2.0)) <= 1e-9, "crossentropy(uniform) != ln 2");

    TD wrong = TD::zeros(Shape{1, 2});
    wrong[1] = 1.0;  // predicts the other class with certainty
    const double m = msle(wrong, truth);
    const double ln2 = std::log(2.0);
    c.expect(std::abs(m - ln2 * ln2) <= 1e-9, "msle(total miss) != ln^2 2");
    c.seconds = now_seconds() - t0;
    return c;
}

// ---------------------------------------------------------------------------
// Criterion 10: t-SNE sanity plus the trained-model embedding analog
// ---------------------------------------------------------------------------

Criterion criterion_10(const HeavyArtifacts& heavy) {
    Criterion c{10, "t-SNE purity/perplexity/descent; trained dense2 embedding separates"};
    const double t0 = now_seconds();

    // Three separated 50-d Gaussian clusters embed with 5-NN purity >= 0.95.
    {
        Rng rng(31);
        TensorD pts = TensorD::zeros(Shape{30, 50});
        std::vector<int> labels(30);
        for (int64_t i = 0; i < 30; ++i) {
            const int cl = static_cast<int>(i / 10);
            labels[size_t(i)] = cl;
            for (int64_t k = 0; k < 50; ++k)
                pts[i * 50 + k] = rng.normal() + (k == cl ? 20.0 : 0.0);
        }
        TsneConfig cfg;
        cfg.perplexity = 6;  // below the 10-point cluster size
        cfg.step_size = 50;  // the default step ejects strays at n = 30
        cfg.seed = 3;
        const Embedding emb = tsne(pts, cfg);
        const double purity = knn_purity(emb.coords, labels, 5);
        c.note("cluster purity " + fmt(purity));
        c.expect(purity >= 0.95, "3-cluster embedding purity below 0.95");
    }

    // Per-row achieved perplexity within 1e-3 of the target.
    {
        Rng rng(17);
        TensorD pts = TensorD::zeros(Shape{25, 8});
        for (double& v : pts) v = rng.normal();
        const double perplexity = 7.0;
        const TensorD cond = conditional_affinities(pts, perplexity);
        for (int64_t i = 0; i < 25; ++i) {
            double entropy = 0;
            for (int64_t j = 0; j < 25; ++j) {
                const double pj = cond[i * 25 + j];
                if (pj > 0) entropy -= pj * std::log(pj);
            }
            c.expect(std::abs(std::exp(entropy) - perplexity) <= 1e-3,
                     "achieved perplexity off by > 1e-3");
        }
    }

    // Final KL below post-exaggeration KL for 10 seeds out of 10.
    {
        TsneConfig cfg;
        cfg.iterations = 600;
        cfg.exaggeration_iters = 250;
        for (uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(1000 + seed);
            TensorD pts = TensorD::zeros(Shape{20, 10});
            for (double& v : pts) v = rng.normal();
            cfg.seed = seed;
            const Embedding emb = tsne(pts, cfg);
            c.expect(emb.final_kl < emb.kl_post_exaggeration,
                     "KL did not descend after exaggeration (seed " + std::to_string(seed) + ")");
        }
    }

    // Fig.-4 analog: embed the last trained model's validation features; the
    // dense2 stage must separate the classes (purity >= 0.85) and beat the
    // raw input stage.
    if (!heavy.trained) {
        c.expect(false, "criterion 7 artifacts unavailable for the embedding analog");
    } else {
        const std::vector<int64_t>& val_idx = heavy.summary.runs.back().val_indices;
        const Cohort val_set = subset(heavy.cohort, val_idx);
        const fs::path out_dir = fs::temp_directory_path() / "acceptance_tsne";
        fs::remove_all(out_dir);
        TsneConfig cfg;
        cfg.seed = 0;
        const std::array<Embedding, 4> embs =
            embed_stages(heavy.summary.last_net, val_set, cfg, out_dir);
        std::vector<int64_t> all(val_set.samples.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int64_t>(i);
        const std::vector<int> labels = gather_labels(val_set, all);
        const double input_purity = knn_purity(embs[0].coords, labels, 5);
        const double dense2_purity = knn_purity(embs[3].coords, labels, 5);
        c.note("input-stage purity " + fmt(input_purity) + ", dense2-stage purity " +
               fmt(dense2_purity));
        c.expect(dense2_purity >= 0.85, "dense2 embedding purity below 0.85");
        c.expect(dense2_purity > input_purity, "dense2 purity not above input-stage purity");
        fs::remove_all(out_dir);
    }
    c.seconds = now_seconds() - t0;
    return c;
}

}  // namespace

int main() {
    std::printf("acceptance: %d criteria\n", 10);
    std::fflush(stdout);
    now_seconds();  // anchor the clock

    std::vector<Criterion> results;
    // Cheap criteria first; 7 carries the training cost and feeds 8 and 10.
    results.push_back(criterion_3());
    report(results.back());
    results.push_back(criterion_9());
    report(results.back());
    results.push_back(criterion_4());
    report(results.back());
    results.push_back(criterion_2());
    report(results.back());
    results.push_back(criterion_5());
    report(results.back());
    results.push_back(criterion_6());
    report(results.back());
    results.push_back(criterion_1());
    report(results.back());

    HeavyArtifacts heavy;
    results.push_back(criterion_7(heavy));
    report(results.back());
    results.push_back(criterion_8(heavy));
    report(results.back());
    results.push_back(criterion_10(heavy));
    report(results.back());

    std::sort(results.begin(), results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int failed = 0;
    std::printf("\nsummary:\n");
    for (const Criterion& c : results) {
        std::printf("  criterion %2d: %s\n", c.id, c.pass ? "PASS" : "FAIL");
        failed += c.pass ? 0 : 1;
    }
    std::printf("%d/10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
