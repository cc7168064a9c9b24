#include "longsiam/nifti.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>
#include <string>

#include "longsiam/io_util.hpp"

namespace longsiam {

namespace {

// Field offsets within the 348-byte header.
constexpr size_t kOffSizeofHdr = 0;
constexpr size_t kOffDim = 40;
constexpr size_t kOffDatatype = 70;
constexpr size_t kOffBitpix = 72;
constexpr size_t kOffPixdim = 76;
constexpr size_t kOffVoxOffset = 108;
constexpr size_t kOffSclSlope = 112;
constexpr size_t kOffSclInter = 116;
constexpr size_t kOffMagic = 344;
constexpr size_t kHeaderSize = 348;

template <typename T>
T load_scalar(const uint8_t* p, bool swap) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap && sizeof(T) > 1) {
        uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
        std::memcpy(&v, raw, sizeof(T));
    }
    return v;
}

template <typename T>
void store_scalar(uint8_t* p, T v) {
    std::memcpy(p, &v, sizeof(T));
}

bool is_gzip(const std::vector<uint8_t>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

template <typename S>
void decode_voxels(const uint8_t* src, int64_t count, bool swap, float slope, float inter,
                   float* dst) {
    for (int64_t i = 0; i < count; ++i) {
        S raw = load_scalar<S>(src + static_cast<size_t>(i) * sizeof(S), swap);
        dst[i] = static_cast<float>(raw) * slope + inter;
    }
}

}  // namespace

Volume make_volume(int64_t nx, int64_t ny, int64_t nz, std::array<float, 3> spacing) {
    return Volume{TensorF::zeros(Shape{nx, ny, nz}), spacing};
}

std::vector<uint8_t> gzip_decompress(const std::vector<uint8_t>& bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw std::runtime_error("gzip: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<uint8_t> out;
    std::vector<uint8_t> chunk(1 << 18);
    int ret;
    do {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gzip: corrupt stream (inflate code " + std::to_string(ret) + ")");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<uint8_t> gzip_compress(const std::vector<uint8_t>& bytes) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK)
        throw std::runtime_error("gzip: deflateInit failed");
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<uint8_t> out;
    std::vector<uint8_t> chunk(1 << 18);
    int ret;
    do {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        ret = deflate(&zs, Z_FINISH);
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    } while (ret != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

Volume parse_nifti(const std::vector<uint8_t>& raw) {
    const std::vector<uint8_t>* bytes = &raw;
    std::vector<uint8_t> inflated;
    if (is_gzip(raw)) {
        inflated = gzip_decompress(raw);
        bytes = &inflated;
    }
    const std::vector<uint8_t>& b = *bytes;
    if (b.size() < kHeaderSize) throw std::runtime_error("nifti: stream shorter than a header");

    // Endianness: sizeof_hdr must read 348 under exactly one byte order.
    // 540 under either order means a NIfTI-2 header.
    int32_t hdr_native = load_scalar<int32_t>(b.data() + kOffSizeofHdr, false);
    int32_t hdr_swapped = load_scalar<int32_t>(b.data() + kOffSizeofHdr, true);
    bool swap;
    if (hdr_native == 348) swap = false;
    else if (hdr_swapped == 348) swap = true;
    else if (hdr_native == 540 || hdr_swapped == 540)
        throw std::runtime_error("nifti: NIfTI-2 headers are not supported");
    else
        throw std::runtime_error("nifti: sizeof_hdr is not 348 under either byte order");

    NiftiHeader h;
    h.sizeof_hdr = 348;
    for (size_t i = 0; i < 8; ++i)
        h.dim[i] = load_scalar<int16_t>(b.data() + kOffDim + 2 * i, swap);
    h.datatype = load_scalar<int16_t>(b.data() + kOffDatatype, swap);
    h.bitpix = load_scalar<int16_t>(b.data() + kOffBitpix, swap);
    for (size_t i = 0; i < 8; ++i)
        h.pixdim[i] = load_scalar<float>(b.data() + kOffPixdim + 4 * i, swap);
    h.vox_offset = load_scalar<float>(b.data() + kOffVoxOffset, swap);
    h.scl_slope = load_scalar<float>(b.data() + kOffSclSlope, swap);
    h.scl_inter = load_scalar<float>(b.data() + kOffSclInter, swap);
    std::memcpy(h.magic.data(), b.data() + kOffMagic, 4);

    if (std::memcmp(h.magic.data(), "n+1", 4) != 0) {
        if (std::memcmp(h.magic.data(), "ni1", 4) == 0)
            throw std::runtime_error("nifti: header/data pairs (.hdr/.img) are not supported");
        throw std::runtime_error("nifti: bad magic");
    }
    if (h.dim[0] < 1 || h.dim[0] > 7)
        throw std::runtime_error("nifti: dim[0] out of range 1..7");
    if (h.dim[0] > 3) {
        for (int i = 4; i <= h.dim[0]; ++i)
            if (h.dim[i] > 1)
                throw std::runtime_error("nifti: >3D volumes with non-trivial trailing extents "
                                         "are not supported");
    }

    int64_t nx = h.dim[1];
    int64_t ny = h.dim[0] >= 2 ? h.dim[2] : 1;
    int64_t nz = h.dim[0] >= 3 ? h.dim[3] : 1;
    if (nx < 1 || ny < 1 || nz < 1) throw std::runtime_error("nifti: non-positive extent");
    const int64_t count = Shape{nx, ny, nz}.count();

    size_t elem_size;
    switch (h.datatype) {
        case kDtUint8: elem_size = 1; break;
        case kDtInt16: elem_size = 2; break;
        case kDtInt32: elem_size = 4; break;
        case kDtFloat32: elem_size = 4; break;
        case kDtFloat64: elem_size = 8; break;
        case kDtUint16: elem_size = 2; break;
        default:
            throw std::runtime_error("nifti: unsupported datatype code " +
                                     std::to_string(h.datatype));
    }

    const size_t offset = static_cast<size_t>(h.vox_offset);
    if (h.vox_offset < kHeaderSize)
        throw std::runtime_error("nifti: vox_offset precedes the end of the header");
    if (b.size() < offset + static_cast<size_t>(count) * elem_size)
        throw std::runtime_error("nifti: truncated data section");

    const float slope = h.scl_slope != 0.0f ? h.scl_slope : 1.0f;
    const float inter = h.scl_slope != 0.0f ? h.scl_inter : 0.0f;

    // NIfTI stores x fastest; this toolkit stores z fastest. Decode into file
    // order, then transpose.
    std::vector<float> file_order(static_cast<size_t>(count));
    const uint8_t* src = b.data() + offset;
    switch (h.datatype) {
        case kDtUint8: decode_voxels<uint8_t>(src, count, swap, slope, inter, file_order.data()); break;
        case kDtInt16: decode_voxels<int16_t>(src, count, swap, slope, inter, file_order.data()); break;
        case kDtInt32: decode_voxels<int32_t>(src, count, swap, slope, inter, file_order.data()); break;
        case kDtFloat32: decode_voxels<float>(src, count, swap, slope, inter, file_order.data()); break;
        case kDtFloat64: decode_voxels<double>(src, count, swap, slope, inter, file_order.data()); break;
        case kDtUint16: decode_voxels<uint16_t>(src, count, swap, slope, inter, file_order.data()); break;
        default: break;
    }

    Volume v = make_volume(nx, ny, nz);
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x)
                v.at(x, y, z) = file_order[static_cast<size_t>((z * ny + y) * nx + x)];

    for (int i = 0; i < 3; ++i) {
        float s = h.pixdim[static_cast<size_t>(i + 1)];
        v.spacing[static_cast<size_t>(i)] = s > 0.0f ? s : 1.0f;
    }
    if (!all_finite(v.intensities))
        throw std::runtime_error("nifti: non-finite voxel values after decoding");
    return v;
}

std::vector<uint8_t> serialize_nifti(const Volume& v) {
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    const int64_t count = nx * ny * nz;
    std::vector<uint8_t> out(352 + static_cast<size_t>(count) * 4, 0);

    store_scalar<int32_t>(out.data() + kOffSizeofHdr, 348);
    int16_t dim[8] = {3, static_cast<int16_t>(nx), static_cast<int16_t>(ny),
                      static_cast<int16_t>(nz), 1, 1, 1, 1};
    if (nx > 32767 || ny > 32767 || nz > 32767)
        throw std::runtime_error("nifti: extent exceeds the int16 dim field");
    for (size_t i = 0; i < 8; ++i) store_scalar<int16_t>(out.data() + kOffDim + 2 * i, dim[i]);
    store_scalar<int16_t>(out.data() + kOffDatatype, kDtFloat32);
    store_scalar<int16_t>(out.data() + kOffBitpix, 32);
    float pixdim[8] = {1.0f, v.spacing[0], v.spacing[1], v.spacing[2], 1.0f, 1.0f, 1.0f, 1.0f};
    for (size_t i = 0; i < 8; ++i) store_scalar<float>(out.data() + kOffPixdim + 4 * i, pixdim[i]);
    store_scalar<float>(out.data() + kOffVoxOffset, 352.0f);
    store_scalar<float>(out.data() + kOffSclSlope, 1.0f);
    store_scalar<float>(out.data() + kOffSclInter, 0.0f);
    std::memcpy(out.data() + kOffMagic, "n+1", 4);

    uint8_t* dst = out.data() + 352;
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x) {
                store_scalar<float>(dst, v.at(x, y, z));
                dst += 4;
            }
    return out;
}

Volume read_nifti_file(const std::filesystem::path& path) {
    return parse_nifti(read_file_bytes(path));
}

void write_nifti_file(const std::filesystem::path& path, const Volume& v) {
    std::vector<uint8_t> bytes = serialize_nifti(v);
    if (path.extension() == ".gz") bytes = gzip_compress(bytes);
    atomic_write_file(path, bytes);
}

}  // namespace longsiam
