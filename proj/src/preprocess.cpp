#include "longsiam/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace longsiam {

Volume apply_mask(const Volume& v, const Volume& mask) {
    if (v.intensities.shape() != mask.intensities.shape())
        throw std::invalid_argument("apply_mask: shape mismatch");
    for (const float m : mask.intensities)
        if (m != 0.0f && m != 1.0f)
            throw std::invalid_argument("apply_mask: mask must be binary");
    Volume out = v;
    for (int64_t i = 0; i < out.intensities.size(); ++i)
        out.intensities[i] *= mask.intensities[i];
    return out;
}

Volume scale_unit(const Volume& v) {
    float lo = v.intensities[0], hi = v.intensities[0];
    for (const float x : v.intensities) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    Volume out = v;
    if (hi == lo) {
        for (float& x : out.intensities) x = 0.0f;
        return out;
    }
    const float range = hi - lo;
    for (float& x : out.intensities) x = (x - lo) / range;
    return out;
}

Volume zero_pad(const Volume& v, const Shape& target) {
    if (target.rank() != 3) throw std::invalid_argument("zero_pad: target must be rank 3");
    for (int i = 0; i < 3; ++i)
        if (target[i] < v.intensities.shape()[i])
            throw std::invalid_argument("zero_pad: target " + target.str() +
                                        " smaller than source " + v.intensities.shape().str());
    Volume out{TensorF::zeros(target), v.spacing};
    const int64_t ox = (target[0] - v.nx()) / 2;
    const int64_t oy = (target[1] - v.ny()) / 2;
    const int64_t oz = (target[2] - v.nz()) / 2;
    for (int64_t x = 0; x < v.nx(); ++x)
        for (int64_t y = 0; y < v.ny(); ++y)
            for (int64_t z = 0; z < v.nz(); ++z)
                out.at(x + ox, y + oy, z + oz) = v.at(x, y, z);
    return out;
}

namespace detail {

// Classic recursive prefilter for the cubic B-spline: one pole
// z1 = sqrt(3) - 2, overall gain 6, mirror (whole-sample symmetric)
// boundary handling.
namespace {

constexpr double kPole = -0.26794919243112270647;  // sqrt(3) - 2
constexpr double kGain = 6.0;

double initial_causal(const double* c, int64_t n, int64_t stride, double z) {
    const double tol = 1e-15;
    int64_t horizon = static_cast<int64_t>(std::ceil(std::log(tol) / std::log(std::abs(z))));
    if (horizon < n) {
        double zn = z;
        double sum = c[0];
        for (int64_t i = 1; i < horizon; ++i) {
            sum += zn * c[i * stride];
            zn *= z;
        }
        return sum;
    }
    // Short signal: use the closed form over the full mirror period 2n - 2.
    double zn = z;
    double z2n = std::pow(z, static_cast<double>(n - 1));
    double sum = c[0] + z2n * c[(n - 1) * stride];
    z2n *= z2n / z;
    for (int64_t i = 1; i <= n - 2; ++i) {
        sum += (zn + z2n) * c[i * stride];
        zn *= z;
        z2n /= z;
    }
    return sum / (1.0 - zn * zn);
}

double initial_anticausal(const double* c, int64_t n, int64_t stride, double z) {
    return (z / (z * z - 1.0)) * (z * c[(n - 2) * stride] + c[(n - 1) * stride]);
}

}  // namespace

void bspline_prefilter(double* data, int64_t n, int64_t stride) {
    if (n == 1) return;
    for (int64_t i = 0; i < n; ++i) data[i * stride] *= kGain;
    data[0] = initial_causal(data, n, stride, kPole);
    for (int64_t i = 1; i < n; ++i)
        data[i * stride] += kPole * data[(i - 1) * stride];
    data[(n - 1) * stride] = initial_anticausal(data, n, stride, kPole);
    for (int64_t i = n - 2; i >= 0; --i)
        data[i * stride] = kPole * (data[(i + 1) * stride] - data[i * stride]);
}

}  // namespace detail

namespace {

// Mirror index into [0, n): ..., 2, 1, 0, 1, 2, ..., n-1, n-2, ...
int64_t mirror(int64_t i, int64_t n) {
    if (n == 1) return 0;
    const int64_t period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

}  // namespace

Volume downscale_spline(const Volume& v) {
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    if (nx < 4 || ny < 4 || nz < 4)
        throw std::invalid_argument("downscale_spline: every extent must be >= 4, got " +
                                    v.intensities.shape().str());

    // Prefilter in double along each axis.
    std::vector<double> c(static_cast<size_t>(nx * ny * nz));
    for (int64_t i = 0; i < v.intensities.size(); ++i)
        c[static_cast<size_t>(i)] = static_cast<double>(v.intensities[i]);
    for (int64_t x = 0; x < nx; ++x)
        for (int64_t y = 0; y < ny; ++y)
            detail::bspline_prefilter(c.data() + (x * ny + y) * nz, nz, 1);
    for (int64_t x = 0; x < nx; ++x)
        for (int64_t z = 0; z < nz; ++z)
            detail::bspline_prefilter(c.data() + x * ny * nz + z, ny, nz);
    for (int64_t y = 0; y < ny; ++y)
        for (int64_t z = 0; z < nz; ++z)
            detail::bspline_prefilter(c.data() + y * nz + z, nx, ny * nz);

    // Sample coordinates are the integers 2*i, so the cubic kernel reduces to
    // weights (1/6, 4/6, 1/6) over {x-1, x, x+1} per axis.
    const int64_t ox = (nx + 1) / 2, oy = (ny + 1) / 2, oz = (nz + 1) / 2;
    Volume out{TensorF::zeros(Shape{ox, oy, oz}),
               {v.spacing[0] * 2, v.spacing[1] * 2, v.spacing[2] * 2}};
    const double w[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
    for (int64_t i = 0; i < ox; ++i) {
        for (int64_t j = 0; j < oy; ++j) {
            for (int64_t k = 0; k < oz; ++k) {
                double acc = 0.0;
                for (int a = -1; a <= 1; ++a) {
                    const int64_t xi = mirror(2 * i + a, nx);
                    for (int b = -1; b <= 1; ++b) {
                        const int64_t yi = mirror(2 * j + b, ny);
                        const double wab = w[a + 1] * w[b + 1];
                        const double* row = c.data() + (xi * ny + yi) * nz;
                        double axis_acc = 0.0;
                        for (int d = -1; d <= 1; ++d)
                            axis_acc += w[d + 1] * row[mirror(2 * k + d, nz)];
                        acc += wab * axis_acc;
                    }
                }
                out.at(i, j, k) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

SamplePair preprocess_pair(const Volume& baseline, const Volume& followup, const Shape& target,
                           const Volume* baseline_mask, const Volume* followup_mask) {
    auto pipeline = [&](const Volume& v, const Volume* mask) {
        Volume cur = mask ? apply_mask(v, *mask) : v;
        cur = scale_unit(cur);
        cur = zero_pad(cur, target);
        cur = downscale_spline(cur);
        // The spline leaves sub-epsilon residue around exact 0/1 plateaus;
        // clamp so the advertised [0, 1] output range holds exactly.
        for (float& x : cur.intensities) x = std::clamp(x, 0.0f, 1.0f);
        return cur;
    };
    SamplePair out{pipeline(baseline, baseline_mask), pipeline(followup, followup_mask)};
    if (out.baseline.intensities.shape() != out.followup.intensities.shape())
        throw std::logic_error("preprocess_pair: outputs diverged in shape");
    return out;
}

}  // namespace longsiam
