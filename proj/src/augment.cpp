#include "longsiam/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace longsiam {

namespace {

// The two in-plane axes for a rotation about `axis`, in a fixed order so the
// sign of theta has a stable meaning.
void plane_axes(Axis axis, int& u, int& w) {
    switch (axis) {
        case Axis::LR: u = 1; w = 2; return;
        case Axis::AP: u = 0; w = 2; return;
        case Axis::IS: u = 0; w = 1; return;
    }
    throw std::invalid_argument("rotate: bad axis");
}

}  // namespace

Volume rotate(const Volume& v, double theta_deg, Axis axis) {
    if (std::abs(theta_deg) > 90.0)
        throw std::invalid_argument("rotate: |theta| must be <= 90 degrees");
    if (theta_deg == 0.0) return v;

    int ua, wa;
    plane_axes(axis, ua, wa);
    const int64_t n[3] = {v.nx(), v.ny(), v.nz()};
    const double cu = 0.5 * static_cast<double>(n[ua] - 1);
    const double cw = 0.5 * static_cast<double>(n[wa] - 1);
    const double theta = theta_deg * M_PI / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);

    Volume out{TensorF::zeros(v.intensities.shape()), v.spacing};
    int64_t idx[3];
    for (idx[0] = 0; idx[0] < n[0]; ++idx[0]) {
        for (idx[1] = 0; idx[1] < n[1]; ++idx[1]) {
            for (idx[2] = 0; idx[2] < n[2]; ++idx[2]) {
                // inverse map: source = R(-theta) * (dest - center) + center
                const double du = static_cast<double>(idx[ua]) - cu;
                const double dw = static_cast<double>(idx[wa]) - cw;
                const double su = cu + ct * du + st * dw;
                const double sw = cw - st * du + ct * dw;

                const int64_t u0 = static_cast<int64_t>(std::floor(su));
                const int64_t w0 = static_cast<int64_t>(std::floor(sw));
                const double fu = su - static_cast<double>(u0);
                const double fw = sw - static_cast<double>(w0);

                double acc = 0.0;
                for (int a = 0; a <= 1; ++a) {
                    const int64_t ui = u0 + a;
                    if (ui < 0 || ui >= n[ua]) continue;
                    const double wu = a ? fu : 1.0 - fu;
                    for (int b = 0; b <= 1; ++b) {
                        const int64_t wi = w0 + b;
                        if (wi < 0 || wi >= n[wa]) continue;
                        const double ww = b ? fw : 1.0 - fw;
                        int64_t src[3] = {idx[0], idx[1], idx[2]};
                        src[ua] = ui;
                        src[wa] = wi;
                        acc += wu * ww * static_cast<double>(v.at(src[0], src[1], src[2]));
                    }
                }
                out.at(idx[0], idx[1], idx[2]) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Volume flip_lr(const Volume& v) {
    Volume out{TensorF::zeros(v.intensities.shape()), v.spacing};
    const int64_t nx = v.nx();
    const int64_t slab = v.ny() * v.nz();
    for (int64_t x = 0; x < nx; ++x) {
        const float* src = v.intensities.data() + x * slab;
        float* dst = out.intensities.data() + (nx - 1 - x) * slab;
        std::copy(src, src + slab, dst);
    }
    return out;
}

Volume augment_image(const Volume& v, const AugmentConfig& cfg, Rng& rng) {
    if (cfg.max_rotation_deg < 0)
        throw std::invalid_argument("augment: max_rotation_deg must be >= 0");
    if (cfg.flip_probability < 0 || cfg.flip_probability > 1)
        throw std::invalid_argument("augment: flip_probability must be in [0, 1]");

    const double theta = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    const double flip_draw = rng.uniform();

    Volume out = rotate(v, cfg.max_rotation_deg == 0.0 ? 0.0 : theta, cfg.rotation_axis);
    if (flip_draw < cfg.flip_probability) out = flip_lr(out);
    return out;
}

}  // namespace longsiam
