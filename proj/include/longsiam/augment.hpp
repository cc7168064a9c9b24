#pragma once

#include <cstdint>

#include "longsiam/nifti.hpp"
#include "longsiam/rng.hpp"

namespace longsiam {

/// Volume axes by anatomical role: 0 = left-right, 1 = anterior-posterior,
/// 2 = inferior-superior.
enum class Axis { LR = 0, AP = 1, IS = 2 };

struct AugmentConfig {
    double max_rotation_deg = 5.0;
    Axis rotation_axis = Axis::IS;
    double flip_probability = 0.5;
    uint64_t seed = 0;
};

/// Rotates about the volume center in the plane orthogonal to `axis`,
/// trilinear interpolation, zero fill outside the grid; shape unchanged.
/// theta 0 returns the input bit-identically.
Volume rotate(const Volume& v, double theta_deg, Axis axis);

/// Axis-0 (left-right) reversal.
Volume flip_lr(const Volume& v);

/// One training-time draw: theta ~ U[-max, +max] rotation, then a flip with
/// the configured probability. Consumes exactly two uniforms per call so
/// generator positions are predictable.
Volume augment_image(const Volume& v, const AugmentConfig& cfg, Rng& rng);

}  // namespace longsiam
