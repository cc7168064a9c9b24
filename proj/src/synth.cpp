#include "longsiam/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "longsiam/threading.hpp"

namespace longsiam {

namespace {

constexpr float kVentricleIntensity = 0.08f;
constexpr float kTissueFill = 0.55f;  // replaces voxels a shrinking ventricle vacates
constexpr double kBrainSemiRel = 0.44;
constexpr double kVentricleSemiRel = 0.20;
constexpr double kTissueBase = 0.55;
constexpr double kTissueAmp = 0.12;

struct Vec3 {
    double x, y, z;
};

// Trilinear sample of a corner-aligned low-resolution grid.
double sample_grid(const std::vector<double>& grid, int64_t gx, int64_t gy, int64_t gz, double u,
                   double v, double w) {
    const auto pick = [&](int64_t i, int64_t j, int64_t k) {
        return grid[static_cast<size_t>((i * gy + j) * gz + k)];
    };
    const int64_t i0 = std::min<int64_t>(static_cast<int64_t>(u), gx - 2);
    const int64_t j0 = std::min<int64_t>(static_cast<int64_t>(v), gy - 2);
    const int64_t k0 = std::min<int64_t>(static_cast<int64_t>(w), gz - 2);
    const double fu = u - static_cast<double>(i0);
    const double fv = v - static_cast<double>(j0);
    const double fw = w - static_cast<double>(k0);
    double c[2][2];
    for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk)
            c[dj][dk] = pick(i0, j0 + dj, k0 + dk) * (1 - fu) + pick(i0 + 1, j0 + dj, k0 + dk) * fu;
    const double d0 = c[0][0] * (1 - fw) + c[0][1] * fw;
    const double d1 = c[1][0] * (1 - fw) + c[1][1] * fw;
    return d0 * (1 - fv) + d1 * fv;
}

// One 6-connected erosion pass on the nonzero mask; grid faces count as
// background, so the outer shell always erodes.
void erode_once(Volume& v) {
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    std::vector<uint8_t> mask(static_cast<size_t>(nx * ny * nz));
    const float* p = v.intensities.data();
    for (int64_t i = 0; i < nx * ny * nz; ++i) mask[static_cast<size_t>(i)] = p[i] > 0.0f;
    const auto at = [&](int64_t x, int64_t y, int64_t z) -> bool {
        if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) return false;
        return mask[static_cast<size_t>((x * ny + y) * nz + z)] != 0;
    };
    float* out = v.intensities.data();
    for (int64_t x = 0; x < nx; ++x)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t z = 0; z < nz; ++z) {
                if (!at(x, y, z)) continue;
                const bool keep = at(x - 1, y, z) && at(x + 1, y, z) && at(x, y - 1, z) &&
                                  at(x, y + 1, z) && at(x, y, z - 1) && at(x, y, z + 1);
                if (!keep) out[(x * ny + y) * nz + z] = 0.0f;
            }
}

}  // namespace

Volume make_subject(const CohortSpec& spec, Rng& rng) {
    spec.validate();
    const int64_t nx = spec.volume_shape[0], ny = spec.volume_shape[1],
                  nz = spec.volume_shape[2];

    // Draw order: brain semi-axes, ventricle semi-axes, then the noise grid.
    Vec3 brain{kBrainSemiRel * static_cast<double>(nx) * rng.uniform(0.9, 1.1),
               kBrainSemiRel * static_cast<double>(ny) * rng.uniform(0.9, 1.1),
               kBrainSemiRel * static_cast<double>(nz) * rng.uniform(0.9, 1.1)};
    Vec3 vent{kVentricleSemiRel * static_cast<double>(nx) * rng.uniform(0.9, 1.1),
              kVentricleSemiRel * static_cast<double>(ny) * rng.uniform(0.9, 1.1),
              kVentricleSemiRel * static_cast<double>(nz) * rng.uniform(0.9, 1.1)};

    const int64_t gx = std::max<int64_t>(2, nx / 4);
    const int64_t gy = std::max<int64_t>(2, ny / 4);
    const int64_t gz = std::max<int64_t>(2, nz / 4);
    std::vector<double> grid(static_cast<size_t>(gx * gy * gz));
    for (double& g : grid) g = rng.normal();

    const Vec3 c{(static_cast<double>(nx) - 1) / 2, (static_cast<double>(ny) - 1) / 2,
                 (static_cast<double>(nz) - 1) / 2};
    Volume v = make_volume(nx, ny, nz);
    float* out = v.intensities.data();
    for (int64_t x = 0; x < nx; ++x) {
        const double dx = (static_cast<double>(x) - c.x);
        for (int64_t y = 0; y < ny; ++y) {
            const double dy = (static_cast<double>(y) - c.y);
            for (int64_t z = 0; z < nz; ++z) {
                const double dz = (static_cast<double>(z) - c.z);
                const double rb = (dx / brain.x) * (dx / brain.x) +
                                  (dy / brain.y) * (dy / brain.y) +
                                  (dz / brain.z) * (dz / brain.z);
                if (rb > 1.0) continue;  // background stays exactly 0
                const double rv = (dx / vent.x) * (dx / vent.x) + (dy / vent.y) * (dy / vent.y) +
                                  (dz / vent.z) * (dz / vent.z);
                float& dst = out[(x * ny + y) * nz + z];
                if (rv <= 1.0) {
                    dst = kVentricleIntensity;
                } else {
                    const double u = static_cast<double>(x) * static_cast<double>(gx - 1) /
                                     static_cast<double>(nx - 1);
                    const double w1 = static_cast<double>(y) * static_cast<double>(gy - 1) /
                                      static_cast<double>(ny - 1);
                    const double w2 = static_cast<double>(z) * static_cast<double>(gz - 1) /
                                      static_cast<double>(nz - 1);
                    double g = sample_grid(grid, gx, gy, gz, u, w1, w2);
                    g = std::clamp(g, -2.0, 2.0);
                    dst = static_cast<float>(kTissueBase + kTissueAmp * g);
                }
            }
        }
    }
    return v;
}

Volume make_followup(const Volume& baseline, int label, const CohortSpec& spec, Rng& rng,
                     FollowupInfo* info) {
    spec.validate();
    if (label != kLabelStable && label != kLabelDecline)
        throw std::invalid_argument("make_followup: label must be 0 (Stable) or 1 (Decline)");
    const Range range = label == kLabelDecline ? spec.decline_ventricle_growth : spec.stable_drift;
    const double scale = rng.uniform(range.lo, range.hi);
    if (info) info->ventricle_scale = scale;

    Volume v = baseline;
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    float* out = v.intensities.data();

    if (scale != 1.0) {
        // Ventricle voxels carry the exact marker intensity; rescale the
        // region about its centroid by nearest-voxel membership lookup.
        const float* base = baseline.intensities.data();
        std::vector<uint8_t> was(static_cast<size_t>(nx * ny * nz), 0);
        double cx = 0, cy = 0, cz = 0;
        int64_t count = 0;
        for (int64_t x = 0; x < nx; ++x)
            for (int64_t y = 0; y < ny; ++y)
                for (int64_t z = 0; z < nz; ++z)
                    if (base[(x * ny + y) * nz + z] == kVentricleIntensity) {
                        was[static_cast<size_t>((x * ny + y) * nz + z)] = 1;
                        cx += static_cast<double>(x);
                        cy += static_cast<double>(y);
                        cz += static_cast<double>(z);
                        ++count;
                    }
        if (count > 0) {
            cx /= static_cast<double>(count);
            cy /= static_cast<double>(count);
            cz /= static_cast<double>(count);
            const auto member = [&](int64_t x, int64_t y, int64_t z) -> bool {
                const auto src = [&](double p, double c) { return c + (p - c) / scale; };
                const int64_t sx = std::llround(src(static_cast<double>(x), cx));
                const int64_t sy = std::llround(src(static_cast<double>(y), cy));
                const int64_t sz = std::llround(src(static_cast<double>(z), cz));
                if (sx < 0 || sx >= nx || sy < 0 || sy >= ny || sz < 0 || sz >= nz) return false;
                return was[static_cast<size_t>((sx * ny + sy) * nz + sz)] != 0;
            };
            for (int64_t x = 0; x < nx; ++x)
                for (int64_t y = 0; y < ny; ++y)
                    for (int64_t z = 0; z < nz; ++z) {
                        const int64_t i = (x * ny + y) * nz + z;
                        const bool inside =
                            member(x, y, z) && base[i] > 0.0f;  // never exceeds the brain
                        if (inside && !was[static_cast<size_t>(i)]) out[i] = kVentricleIntensity;
                        else if (!inside && was[static_cast<size_t>(i)]) out[i] = kTissueFill;
                    }
        }
    }

    if (label == kLabelDecline)
        for (int pass = 0; pass < spec.erosion_voxels; ++pass) erode_once(v);

    if (spec.noise_sigma > 0) {
        const int64_t n = nx * ny * nz;
        for (int64_t i = 0; i < n; ++i) {
            if (out[i] <= 0.0f) continue;  // background stays exactly 0
            const double noisy =
                static_cast<double>(out[i]) + spec.noise_sigma * rng.normal();
            out[i] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
        }
    }
    return v;
}

Cohort generate_cohort(const CohortSpec& spec) {
    spec.validate();
    const int64_t total = spec.n_stable + spec.n_decline;
    Cohort cohort;
    cohort.samples.resize(static_cast<size_t>(total));
    parallel_for(total, [&](int64_t i) {
        const bool decline = i >= spec.n_stable;
        const int label = decline ? kLabelDecline : kLabelStable;
        const int64_t ordinal = decline ? i - spec.n_stable + 1 : i + 1;
        char id[16];
        std::snprintf(id, sizeof(id), "%c%04lld", decline ? 'd' : 's',
                      static_cast<long long>(ordinal));
        Rng rng(derive_seed(spec.seed, static_cast<uint64_t>(i)));
        Sample& s = cohort.samples[static_cast<size_t>(i)];
        s.subject_id = id;
        s.label = label;
        s.baseline = make_subject(spec, rng);
        s.followup = make_followup(s.baseline, label, spec, rng);
    });
    return cohort;
}

Cohort generate_cohort_to_dir(const CohortSpec& spec, const std::filesystem::path& out_dir) {
    Cohort cohort = generate_cohort(spec);
    write_cohort(cohort, out_dir);
    return cohort;
}

}  // namespace longsiam
