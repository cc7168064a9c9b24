#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "longsiam/cohort.hpp"
#include "longsiam/rng.hpp"

namespace longsiam {

struct Range {
    double lo = 0, hi = 0;
};

/// Parameters of the synthetic longitudinal cohort. Declines show ventricle
/// dilation plus outer-boundary erosion; setting erosion_voxels to 0 and
/// decline_ventricle_growth equal to stable_drift removes every class signal
/// (the null-signal control).
struct CohortSpec {
    int64_t n_stable = 134;
    int64_t n_decline = 113;
    Shape volume_shape{102, 108, 75};
    double noise_sigma = 0.02;
    Range decline_ventricle_growth{1.05, 1.15};
    Range stable_drift{0.99, 1.01};
    int erosion_voxels = 1;
    uint64_t seed = 0;

    void validate() const {
        if (n_stable < 0 || n_decline < 0)
            throw std::invalid_argument("cohort: subject counts must be >= 0");
        if (volume_shape.rank() != 3)
            throw std::invalid_argument("cohort: volume_shape must have 3 extents");
        for (int64_t i = 0; i < 3; ++i)
            if (volume_shape[i] < 16)
                throw std::invalid_argument(
                    "cohort: extents must be >= 16 to fit the phantom structures");
        if (noise_sigma < 0) throw std::invalid_argument("cohort: noise_sigma must be >= 0");
        for (const Range& r : {decline_ventricle_growth, stable_drift})
            if (r.lo <= 0 || r.hi < r.lo)
                throw std::invalid_argument("cohort: scale ranges must be positive with lo <= hi");
        if (erosion_voxels < 0) throw std::invalid_argument("cohort: erosion_voxels must be >= 0");
    }

    /// Desk-scale preset: small volumes for fast end-to-end runs.
    static CohortSpec desk() {
        CohortSpec s;
        s.volume_shape = Shape{32, 32, 24};
        return s;
    }

    /// Same cohort with every longitudinal class signal removed.
    CohortSpec null_control() const {
        CohortSpec s = *this;
        s.decline_ventricle_growth = s.stable_drift;
        s.erosion_voxels = 0;
        return s;
    }
};

/// Baseline phantom: ellipsoidal brain (random ±10% semi-axes) filled with
/// smoothed-noise tissue around a low-intensity central ventricle; background
/// exactly zero; all intensities in [0, 1].
Volume make_subject(const CohortSpec& spec, Rng& rng);

struct FollowupInfo {
    double ventricle_scale = 1.0;  // the drawn rescale factor
};

/// Follow-up scan for a labeled subject: ventricle rescaled by a draw from
/// the class range (Stable: stable_drift, Decline: decline_ventricle_growth),
/// Decline additionally eroded at the outer brain boundary, then voxel noise
/// N(0, noise_sigma) inside the brain, clamped to [0, 1]. With a degenerate
/// spec (sigma 0, drift [1,1]) the Stable follow-up equals the baseline
/// bit-exactly.
Volume make_followup(const Volume& baseline, int label, const CohortSpec& spec, Rng& rng,
                     FollowupInfo* info = nullptr);

/// Full in-memory cohort: n_stable + n_decline subjects, one generator stream
/// per subject derived from the master seed (generation order-independent and
/// parallel-safe).
Cohort generate_cohort(const CohortSpec& spec);

/// generate_cohort plus NIfTI volumes and the manifest CSV under `out_dir`.
Cohort generate_cohort_to_dir(const CohortSpec& spec, const std::filesystem::path& out_dir);

}  // namespace longsiam
