#pragma once

#include "longsiam/nifti.hpp"
#include "longsiam/tensor.hpp"

namespace longsiam {

/// out[i] = v[i] * mask[i]; mask values must be exactly 0 or 1.
Volume apply_mask(const Volume& v, const Volume& mask);

/// Affine rescale to [0, 1]: (v - min) / (max - min). A constant volume maps
/// to all zeros.
Volume scale_unit(const Volume& v);

/// Centers the source in a zero-filled target grid; odd slack puts the extra
/// voxel on the high side.
Volume zero_pad(const Volume& v, const Shape& target);

/// Halves every axis with cubic B-spline interpolation: per-axis prefilter
/// (mirror boundary), then evaluation at sample coordinates 2*i. Output
/// extents are ceil(n/2); spacing doubles. Extents must be >= 4.
Volume downscale_spline(const Volume& v);

struct SamplePair {
    Volume baseline;
    Volume followup;
};

/// Full deterministic pipeline per volume: mask (if given) -> unit scale ->
/// pad to `target` -> spline downscale. `target` is the common pre-downscale
/// shape; the default 204 x 216 x 150 yields 102 x 108 x 75 inputs.
SamplePair preprocess_pair(const Volume& baseline, const Volume& followup,
                           const Shape& target = Shape{204, 216, 150},
                           const Volume* baseline_mask = nullptr,
                           const Volume* followup_mask = nullptr);

namespace detail {
/// In-place cubic B-spline prefilter along one axis (stride walk), mirror
/// boundary. Exposed for tests.
void bspline_prefilter(double* data, int64_t n, int64_t stride);
}  // namespace detail

}  // namespace longsiam
