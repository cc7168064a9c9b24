#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "longsiam/rng.hpp"
#include "longsiam/tensor.hpp"
#include "longsiam/threading.hpp"

namespace longsiam {

enum class Mode { Train, Infer };

template <typename T>
struct Conv3dParams {
    Tensor<T> kernels;  // [out_channels, in_channels, 3, 3, 3]
    Tensor<T> bias;     // [out_channels]

    int64_t out_channels() const { return kernels.shape()[0]; }
    int64_t in_channels() const { return kernels.shape()[1]; }
};

template <typename T>
struct BatchNormParams {
    Tensor<T> gamma, beta;               // [channels]
    Tensor<T> running_mean, running_var; // [channels]
    T epsilon = static_cast<T>(1e-3);
    T momentum = static_cast<T>(0.99);

    int64_t channels() const { return gamma.shape()[0]; }
};

template <typename T>
struct DenseParams {
    Tensor<T> weights;  // [in, out]
    Tensor<T> bias;     // [out]

    int64_t in_features() const { return weights.shape()[0]; }
    int64_t out_features() const { return weights.shape()[1]; }
};

// ---------------------------------------------------------------------------
// Initialization: scaled-normal fan-in scheme, std = sqrt(2 / fan_in).
// ---------------------------------------------------------------------------

template <typename T>
Conv3dParams<T> init_conv3d(int64_t out_channels, int64_t in_channels, Rng& rng) {
    Conv3dParams<T> p{Tensor<T>::zeros(Shape{out_channels, in_channels, 3, 3, 3}),
                      Tensor<T>::zeros(Shape{out_channels})};
    const double std = std::sqrt(2.0 / static_cast<double>(in_channels * 27));
    for (T& w : p.kernels) w = static_cast<T>(std * rng.normal());
    return p;
}

template <typename T>
DenseParams<T> init_dense(int64_t in, int64_t out, Rng& rng) {
    DenseParams<T> p{Tensor<T>::zeros(Shape{in, out}), Tensor<T>::zeros(Shape{out})};
    const double std = std::sqrt(2.0 / static_cast<double>(in));
    for (T& w : p.weights) w = static_cast<T>(std * rng.normal());
    return p;
}

template <typename T>
BatchNormParams<T> init_batchnorm(int64_t channels) {
    return BatchNormParams<T>{Tensor<T>::full(Shape{channels}, T(1)),
                              Tensor<T>::zeros(Shape{channels}),
                              Tensor<T>::zeros(Shape{channels}),
                              Tensor<T>::full(Shape{channels}, T(1))};
}

// ---------------------------------------------------------------------------
// 3D convolution, kernel 3x3x3, stride 1, zero padding 1 ("same" extents).
// ---------------------------------------------------------------------------

template <typename T>
struct Conv3dTape {
    Tensor<T> x;  // forward input, needed for the kernel gradient
};

namespace detail {

// One output row (fixed n, f, zo, yo): accumulate the three-tap stencil of
// every contributing input row into acc[0..W).
template <typename T>
inline void conv_row_stencil(T* acc, const T* row, T w0, T w1, T w2, int64_t W) {
    if (W == 1) {
        acc[0] += w1 * row[0];
        return;
    }
    acc[0] += w1 * row[0] + w2 * row[1];
    for (int64_t x = 1; x < W - 1; ++x)
        acc[x] += w0 * row[x - 1] + w1 * row[x] + w2 * row[x + 1];
    acc[W - 1] += w0 * row[W - 2] + w1 * row[W - 1];
}

}  // namespace detail

template <typename T>
std::pair<Tensor<T>, Conv3dTape<T>> conv3d_forward(const Tensor<T>& x, const Conv3dParams<T>& p) {
    if (x.shape().rank() != 5)
        throw std::invalid_argument("conv3d: input must be [N,C,D,H,W]");
    const int64_t N = x.shape()[0], C = x.shape()[1];
    const int64_t D = x.shape()[2], H = x.shape()[3], W = x.shape()[4];
    if (C != p.in_channels())
        throw std::invalid_argument("conv3d: channel mismatch, input has " + std::to_string(C) +
                                    ", kernels expect " + std::to_string(p.in_channels()));
    const int64_t F = p.out_channels();

    Tensor<T> y = Tensor<T>::zeros(Shape{N, F, D, H, W});
    const T* px = x.data();
    const T* pk = p.kernels.data();
    T* py = y.data();

    parallel_for(N * F, [&](int64_t nf) {
        const int64_t n = nf / F, f = nf % F;
        const T bias = p.bias[f];
        for (int64_t zo = 0; zo < D; ++zo) {
            for (int64_t yo = 0; yo < H; ++yo) {
                T* acc = py + (((n * F + f) * D + zo) * H + yo) * W;
                for (int64_t xo = 0; xo < W; ++xo) acc[xo] = bias;
                for (int64_t c = 0; c < C; ++c) {
                    const T* xc = px + ((n * C + c) * D) * H * W;
                    const T* kc = pk + ((f * C + c) * 27);
                    for (int kd = 0; kd < 3; ++kd) {
                        const int64_t zi = zo + kd - 1;
                        if (zi < 0 || zi >= D) continue;
                        for (int kh = 0; kh < 3; ++kh) {
                            const int64_t yi = yo + kh - 1;
                            if (yi < 0 || yi >= H) continue;
                            const T* row = xc + (zi * H + yi) * W;
                            const T* kw = kc + (kd * 3 + kh) * 3;
                            detail::conv_row_stencil(acc, row, kw[0], kw[1], kw[2], W);
                        }
                    }
                }
            }
        }
    });
    return {std::move(y), Conv3dTape<T>{x}};
}

template <typename T>
struct Conv3dGrads {
    Tensor<T> x;        // [N,C,D,H,W]
    Tensor<T> kernels;  // [F,C,3,3,3]
    Tensor<T> bias;     // [F]
};

/// `need_grad_x = false` skips the input gradient (the first layer of a
/// network has no use for it); g.x is then an empty tensor.
template <typename T>
Conv3dGrads<T> conv3d_backward(const Tensor<T>& grad_out, const Conv3dTape<T>& tape,
                               const Conv3dParams<T>& p, bool need_grad_x = true) {
    const Tensor<T>& x = tape.x;
    const int64_t N = x.shape()[0], C = x.shape()[1];
    const int64_t D = x.shape()[2], H = x.shape()[3], W = x.shape()[4];
    const int64_t F = p.out_channels();
    if (grad_out.shape() != Shape{N, F, D, H, W})
        throw std::invalid_argument("conv3d_backward: grad_out shape mismatch");

    Conv3dGrads<T> g{need_grad_x ? Tensor<T>::zeros(x.shape()) : Tensor<T>(),
                     Tensor<T>::zeros(p.kernels.shape()), Tensor<T>::zeros(p.bias.shape())};
    const T* pg = grad_out.data();
    const T* px = x.data();
    const T* pk = p.kernels.data();

    // grad wrt input: the same stencil with the kernel flipped on all axes.
    T* pgx = g.x.data();
    if (need_grad_x) parallel_for(N * C, [&](int64_t nc) {
        const int64_t n = nc / C, c = nc % C;
        for (int64_t zi = 0; zi < D; ++zi) {
            for (int64_t yi = 0; yi < H; ++yi) {
                T* acc = pgx + (((n * C + c) * D + zi) * H + yi) * W;
                for (int64_t f = 0; f < F; ++f) {
                    const T* gf = pg + ((n * F + f) * D) * H * W;
                    const T* kc = pk + ((f * C + c) * 27);
                    for (int kd = 0; kd < 3; ++kd) {
                        const int64_t zo = zi + kd - 1;
                        if (zo < 0 || zo >= D) continue;
                        for (int kh = 0; kh < 3; ++kh) {
                            const int64_t yo = yi + kh - 1;
                            if (yo < 0 || yo >= H) continue;
                            const T* row = gf + (zo * H + yo) * W;
                            const T* kw = kc + ((2 - kd) * 3 + (2 - kh)) * 3;
                            detail::conv_row_stencil(acc, row, kw[2], kw[1], kw[0], W);
                        }
                    }
                }
            }
        }
    });

    // grad wrt kernels and bias: per output channel, accumulate row products
    // into per-tap buffers (fixed n/zo/yo order keeps the sums deterministic).
    T* pgk = g.kernels.data();
    T* pgb = g.bias.data();
    parallel_for(F, [&](int64_t f) {
        T bias_acc = 0;
        for (int64_t n = 0; n < N; ++n) {
            const T* gf = pg + ((n * F + f) * D) * H * W;
            for (int64_t i = 0; i < D * H * W; ++i) bias_acc += gf[i];
        }
        pgb[f] = bias_acc;

        std::vector<T> tap(static_cast<size_t>(27 * W));
        for (int64_t c = 0; c < C; ++c) {
            std::fill(tap.begin(), tap.end(), T(0));
            for (int64_t n = 0; n < N; ++n) {
                const T* gf = pg + ((n * F + f) * D) * H * W;
                const T* xc = px + ((n * C + c) * D) * H * W;
                for (int64_t zo = 0; zo < D; ++zo) {
                    for (int kd = 0; kd < 3; ++kd) {
                        const int64_t zi = zo + kd - 1;
                        if (zi < 0 || zi >= D) continue;
                        for (int64_t yo = 0; yo < H; ++yo) {
                            const T* grow = gf + (zo * H + yo) * W;
                            for (int kh = 0; kh < 3; ++kh) {
                                const int64_t yi = yo + kh - 1;
                                if (yi < 0 || yi >= H) continue;
                                const T* xrow = xc + (zi * H + yi) * W;
                                T* t = tap.data() + (kd * 9 + kh * 3) * W;
                                // kw = 0,1,2 reads xrow shifted by -1,0,+1
                                for (int64_t xo = 1; xo < W; ++xo)
                                    t[xo] += grow[xo] * xrow[xo - 1];
                                T* t1 = t + W;
                                for (int64_t xo = 0; xo < W; ++xo)
                                    t1[xo] += grow[xo] * xrow[xo];
                                T* t2 = t1 + W;
                                for (int64_t xo = 0; xo < W - 1; ++xo)
                                    t2[xo] += grow[xo] * xrow[xo + 1];
                            }
                        }
                    }
                }
            }
            T* out = pgk + (f * C + c) * 27;
            for (int k = 0; k < 27; ++k) {
                T s = 0;
                const T* t = tap.data() + k * W;
                for (int64_t xo = 0; xo < W; ++xo) s += t[xo];
                out[k] = s;
            }
        }
    });
    return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis of [N, C, spatial...].
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNormTape {
    Tensor<T> xhat;                    // normalized pre-affine input
    Tensor<T> inv_std;                 // [C]
    Tensor<T> batch_mean, batch_var;   // [C], for the running-stat commit
    Mode mode = Mode::Train;
};

/// Pure forward: in train mode the batch statistics land in the tape and are
/// folded into the running stats only by an explicit
/// batchnorm_commit_running_stats call.
template <typename T>
std::pair<Tensor<T>, BatchNormTape<T>> batchnorm_forward(const Tensor<T>& x,
                                                         const BatchNormParams<T>& p, Mode mode) {
    if (x.shape().rank() < 2)
        throw std::invalid_argument("batchnorm: input must be [N,C,...]");
    const int64_t N = x.shape()[0], C = x.shape()[1];
    if (C != p.channels()) throw std::invalid_argument("batchnorm: channel mismatch");
    int64_t S = 1;
    for (int64_t i = 2; i < x.shape().rank(); ++i) S *= x.shape()[i];

    Tensor<T> y = Tensor<T>::zeros(x.shape());
    BatchNormTape<T> tape;
    tape.mode = mode;

    if (mode == Mode::Infer) {
        for (int64_t c = 0; c < C; ++c) {
            const T inv = T(1) / std::sqrt(p.running_var[c] + p.epsilon);
            const T scale = p.gamma[c] * inv;
            const T shift = p.beta[c] - scale * p.running_mean[c];
            for (int64_t n = 0; n < N; ++n) {
                const T* src = x.data() + (n * C + c) * S;
                T* dst = y.data() + (n * C + c) * S;
                for (int64_t s = 0; s < S; ++s) dst[s] = scale * src[s] + shift;
            }
        }
        return {std::move(y), std::move(tape)};
    }

    if (N < 2) throw std::invalid_argument("batchnorm: train mode needs batch size >= 2");
    const T m = static_cast<T>(N * S);
    tape.xhat = Tensor<T>::zeros(x.shape());
    tape.inv_std = Tensor<T>::zeros(Shape{C});
    tape.batch_mean = Tensor<T>::zeros(Shape{C});
    tape.batch_var = Tensor<T>::zeros(Shape{C});

    for (int64_t c = 0; c < C; ++c) {
        T sum = 0;
        for (int64_t n = 0; n < N; ++n) {
            const T* src = x.data() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) sum += src[s];
        }
        const T mean = sum / m;
        T sq = 0;
        for (int64_t n = 0; n < N; ++n) {
            const T* src = x.data() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) {
                const T d = src[s] - mean;
                sq += d * d;
            }
        }
        const T var = sq / m;  // biased, matches the running-stat convention
        const T inv = T(1) / std::sqrt(var + p.epsilon);
        tape.batch_mean[c] = mean;
        tape.batch_var[c] = var;
        tape.inv_std[c] = inv;
        const T scale = p.gamma[c];
        const T shift = p.beta[c];
        for (int64_t n = 0; n < N; ++n) {
            const T* src = x.data() + (n * C + c) * S;
            T* hat = tape.xhat.data() + (n * C + c) * S;
            T* dst = y.data() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) {
                hat[s] = (src[s] - mean) * inv;
                dst[s] = scale * hat[s] + shift;
            }
        }
    }
    return {std::move(y), std::move(tape)};
}

template <typename T>
void batchnorm_commit_running_stats(BatchNormParams<T>& p, const BatchNormTape<T>& tape) {
    if (tape.mode != Mode::Train) return;
    const T mom = p.momentum;
    for (int64_t c = 0; c < p.channels(); ++c) {
        p.running_mean[c] = mom * p.running_mean[c] + (T(1) - mom) * tape.batch_mean[c];
        p.running_var[c] = mom * p.running_var[c] + (T(1) - mom) * tape.batch_var[c];
    }
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> x;
    Tensor<T> gamma, beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormTape<T>& tape,
                                     const BatchNormParams<T>& p) {
    if (tape.mode != Mode::Train)
        throw std::logic_error("batchnorm_backward: tape was recorded in infer mode");
    if (grad_out.shape() != tape.xhat.shape())
        throw std::invalid_argument("batchnorm_backward: grad shape mismatch");
    const int64_t N = grad_out.shape()[0], C = grad_out.shape()[1];
    int64_t S = 1;
    for (int64_t i = 2; i < grad_out.shape().rank(); ++i) S *= grad_out.shape()[i];
    const T m = static_cast<T>(N * S);

    BatchNormGrads<T> g{Tensor<T>::zeros(grad_out.shape()), Tensor<T>::zeros(Shape{C}),
                        Tensor<T>::zeros(Shape{C})};
    for (int64_t c = 0; c < C; ++c) {
        T sum_dy = 0, sum_dy_xhat = 0;
        for (int64_t n = 0; n < N; ++n) {
            const T* dy = grad_out.data() + (n * C + c) * S;
            const T* hat = tape.xhat.data() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s) {
                sum_dy += dy[s];
                sum_dy_xhat += dy[s] * hat[s];
            }
        }
        g.beta[c] = sum_dy;
        g.gamma[c] = sum_dy_xhat;
        const T k = p.gamma[c] * tape.inv_std[c];
        const T mean_dy = sum_dy / m;
        const T mean_dy_xhat = sum_dy_xhat / m;
        for (int64_t n = 0; n < N; ++n) {
            const T* dy = grad_out.data() + (n * C + c) * S;
            const T* hat = tape.xhat.data() + (n * C + c) * S;
            T* dx = g.x.data() + (n * C + c) * S;
            for (int64_t s = 0; s < S; ++s)
                dx[s] = k * (dy[s] - mean_dy - hat[s] * mean_dy_xhat);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Leaky ReLU. The backward pass only needs the output sign (alpha > 0), so
// there is no tape.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha) {
    Tensor<T> y = x;
    for (T& v : y) v = v >= T(0) ? v : alpha * v;
    return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& grad_out, const Tensor<T>& y, T alpha) {
    if (grad_out.shape() != y.shape())
        throw std::invalid_argument("leaky_relu_backward: shape mismatch");
    Tensor<T> dx = grad_out;
    for (int64_t i = 0; i < dx.size(); ++i)
        if (y[i] < T(0)) dx[i] *= alpha;
    return dx;
}

// ---------------------------------------------------------------------------
// Average pooling, 2x2x2 window, stride 2, floor semantics.
// ---------------------------------------------------------------------------

template <typename T>
struct AvgPoolTape {
    Shape in_shape;
};

template <typename T>
std::pair<Tensor<T>, AvgPoolTape<T>> avgpool3d_forward(const Tensor<T>& x) {
    if (x.shape().rank() != 5)
        throw std::invalid_argument("avgpool3d: input must be [N,C,D,H,W]");
    const int64_t N = x.shape()[0], C = x.shape()[1];
    const int64_t D = x.shape()[2], H = x.shape()[3], W = x.shape()[4];
    if (D < 2 || H < 2 || W < 2)
        throw std::invalid_argument("avgpool3d: spatial extents must be >= 2");
    const int64_t Do = D / 2, Ho = H / 2, Wo = W / 2;

    Tensor<T> y = Tensor<T>::zeros(Shape{N, C, Do, Ho, Wo});
    const T inv8 = T(1) / T(8);
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* src = x.data() + nc * D * H * W;
        T* dst = y.data() + nc * Do * Ho * Wo;
        for (int64_t z = 0; z < Do; ++z)
            for (int64_t h = 0; h < Ho; ++h) {
                const T* r00 = src + ((2 * z) * H + 2 * h) * W;
                const T* r01 = r00 + W;
                const T* r10 = src + ((2 * z + 1) * H + 2 * h) * W;
                const T* r11 = r10 + W;
                T* out = dst + (z * Ho + h) * Wo;
                for (int64_t w = 0; w < Wo; ++w)
                    out[w] = (r00[2 * w] + r00[2 * w + 1] + r01[2 * w] + r01[2 * w + 1] +
                              r10[2 * w] + r10[2 * w + 1] + r11[2 * w] + r11[2 * w + 1]) * inv8;
            }
    }
    return {std::move(y), AvgPoolTape<T>{x.shape()}};
}

template <typename T>
Tensor<T> avgpool3d_backward(const Tensor<T>& grad_out, const AvgPoolTape<T>& tape) {
    const int64_t N = tape.in_shape[0], C = tape.in_shape[1];
    const int64_t D = tape.in_shape[2], H = tape.in_shape[3], W = tape.in_shape[4];
    const int64_t Do = D / 2, Ho = H / 2, Wo = W / 2;
    if (grad_out.shape() != Shape{N, C, Do, Ho, Wo})
        throw std::invalid_argument("avgpool3d_backward: grad shape mismatch");

    Tensor<T> dx = Tensor<T>::zeros(tape.in_shape);
    const T inv8 = T(1) / T(8);
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* g = grad_out.data() + nc * Do * Ho * Wo;
        T* dst = dx.data() + nc * D * H * W;
        for (int64_t z = 0; z < Do; ++z)
            for (int64_t h = 0; h < Ho; ++h)
                for (int64_t w = 0; w < Wo; ++w) {
                    const T v = g[(z * Ho + h) * Wo + w] * inv8;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dh = 0; dh < 2; ++dh) {
                            T* row = dst + ((2 * z + dz) * H + 2 * h + dh) * W + 2 * w;
                            row[0] += v;
                            row[1] += v;
                        }
                }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dense (fully connected) layer: y = x W + b.
// ---------------------------------------------------------------------------

template <typename T>
struct DenseTape {
    Tensor<T> x;
};

template <typename T>
std::pair<Tensor<T>, DenseTape<T>> dense_forward(const Tensor<T>& x, const DenseParams<T>& p) {
    if (x.shape().rank() != 2 || x.shape()[1] != p.in_features())
        throw std::invalid_argument("dense: input must be [N," +
                                    std::to_string(p.in_features()) + "]");
    Tensor<T> y = matmul(x, p.weights);
    const int64_t N = y.shape()[0], O = y.shape()[1];
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < O; ++o) y[n * O + o] += p.bias[o];
    return {std::move(y), DenseTape<T>{x}};
}

template <typename T>
struct DenseGrads {
    Tensor<T> x;
    Tensor<T> weights, bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const DenseTape<T>& tape,
                             const DenseParams<T>& p) {
    const int64_t N = tape.x.shape()[0], I = p.in_features(), O = p.out_features();
    if (grad_out.shape() != Shape{N, O})
        throw std::invalid_argument("dense_backward: grad shape mismatch");

    DenseGrads<T> g{Tensor<T>::zeros(Shape{N, I}), Tensor<T>::zeros(Shape{I, O}),
                    Tensor<T>::zeros(Shape{O})};
    // dx = dy W^T
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < O; ++o) {
            const T dy = grad_out[n * O + o];
            const T* wrow = p.weights.data() + o;  // column o, stride O
            T* dxrow = g.x.data() + n * I;
            for (int64_t i = 0; i < I; ++i) dxrow[i] += dy * wrow[i * O];
        }
    // dW = x^T dy ; db = column sums of dy
    for (int64_t n = 0; n < N; ++n) {
        const T* xrow = tape.x.data() + n * I;
        const T* dyrow = grad_out.data() + n * O;
        for (int64_t i = 0; i < I; ++i) {
            const T xv = xrow[i];
            T* wrow = g.weights.data() + i * O;
            for (int64_t o = 0; o < O; ++o) wrow[o] += xv * dyrow[o];
        }
        for (int64_t o = 0; o < O; ++o) g.bias[o] += dyrow[o];
    }
    return g;
}

// ---------------------------------------------------------------------------
// Inverted dropout: survivors scale by 1/(1-rate); inference is the identity.
// ---------------------------------------------------------------------------

template <typename T>
std::pair<Tensor<T>, Tensor<T>> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (mode == Mode::Infer || rate == 0.0)
        return {x, Tensor<T>::full(x.shape(), T(1))};
    Tensor<T> mask = Tensor<T>::zeros(x.shape());
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < x.size(); ++i) {
        if (rng.uniform() >= rate) {
            mask[i] = T(1);
            y[i] = x[i] * scale;
        }
    }
    return {std::move(y), std::move(mask)};
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask, double rate) {
    Tensor<T> dx = grad_out;
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (int64_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i] * scale;
    return dx;
}

// ---------------------------------------------------------------------------
// Row-wise softmax, stabilized by max subtraction.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
    if (x.shape().rank() != 2) throw std::invalid_argument("softmax: input must be [N,K]");
    const int64_t N = x.shape()[0], K = x.shape()[1];
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    for (int64_t n = 0; n < N; ++n) {
        const T* row = x.data() + n * K;
        T* out = y.data() + n * K;
        T hi = row[0];
        for (int64_t k = 1; k < K; ++k) hi = std::max(hi, row[k]);
        T sum = 0;
        for (int64_t k = 0; k < K; ++k) {
            out[k] = std::exp(row[k] - hi);
            sum += out[k];
        }
        for (int64_t k = 0; k < K; ++k) out[k] /= sum;
    }
    return y;
}

}  // namespace longsiam
