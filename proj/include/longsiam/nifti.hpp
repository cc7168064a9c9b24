#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "longsiam/tensor.hpp"

namespace longsiam {

/// 3D intensity grid plus voxel spacing in millimetres.
/// Axis order is the stored (x, y, z) order of the file; axis 0 is
/// documented as left-right. No reorientation is performed.
struct Volume {
    TensorF intensities;              // shape [nx, ny, nz]
    std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};

    int64_t nx() const { return intensities.shape()[0]; }
    int64_t ny() const { return intensities.shape()[1]; }
    int64_t nz() const { return intensities.shape()[2]; }

    float& at(int64_t x, int64_t y, int64_t z) {
        return intensities[(x * ny() + y) * nz() + z];
    }
    float at(int64_t x, int64_t y, int64_t z) const {
        return intensities[(x * ny() + y) * nz() + z];
    }

    bool operator==(const Volume& other) const = default;
};

Volume make_volume(int64_t nx, int64_t ny, int64_t nz,
                   std::array<float, 3> spacing = {1.0f, 1.0f, 1.0f});

/// The fixed 348-byte single-file header, resolved to host byte order.
/// Only the fields this toolkit reads or writes are surfaced.
struct NiftiHeader {
    int32_t sizeof_hdr = 348;
    std::array<int16_t, 8> dim{};
    int16_t datatype = 0;
    int16_t bitpix = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = 352.0f;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;
    std::array<char, 4> magic{};
};

// datatype codes supported by the reader
inline constexpr int16_t kDtUint8 = 2;
inline constexpr int16_t kDtInt16 = 4;
inline constexpr int16_t kDtInt32 = 8;
inline constexpr int16_t kDtFloat32 = 16;
inline constexpr int16_t kDtFloat64 = 64;
inline constexpr int16_t kDtUint16 = 512;

/// Decodes a single-file NIfTI-1 volume from raw bytes. Handles byte-swapped
/// headers (detected via sizeof_hdr), gzip containers (magic 0x1f 0x8b),
/// scl_slope/scl_inter scaling, and 4D+ files whose trailing extents are 1.
Volume parse_nifti(const std::vector<uint8_t>& bytes);

/// Encodes a volume as an uncompressed single-file NIfTI-1 stream:
/// float32 data, vox_offset 352, scl_slope 1, scl_inter 0, native byte order.
std::vector<uint8_t> serialize_nifti(const Volume& v);

std::vector<uint8_t> gzip_compress(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> gzip_decompress(const std::vector<uint8_t>& bytes);

/// File variants; a ".gz" suffix selects the gzip container on write and is
/// irrelevant on read (container detection is by magic bytes).
Volume read_nifti_file(const std::filesystem::path& path);
void write_nifti_file(const std::filesystem::path& path, const Volume& v);

}  // namespace longsiam
