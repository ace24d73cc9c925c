#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "neuroglm/errors.hpp"
#include "neuroglm/volume.hpp"

// Single-file uncompressed NIfTI-1 only: 348-byte little-endian header, magic
// "n+1", float32 or float64 payload at vox_offset >= 352. Compressed and
// paired (.hdr/.img) variants are rejected.

namespace neuroglm::io {

#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr = 348; //   0
    char data_type[10] = {};       //   4
    char db_name[18] = {};         //  14
    std::int32_t extents = 0;      //  32
    std::int16_t session_error = 0; //  36
    char regular = 'r';            //  38
    char dim_info = 0;             //  39
    std::int16_t dim[8] = {};      //  40
    float intent_p1 = 0;           //  56
    float intent_p2 = 0;           //  60
    float intent_p3 = 0;           //  64
    std::int16_t intent_code = 0;  //  68
    std::int16_t datatype = 0;     //  70
    std::int16_t bitpix = 0;       //  72
    std::int16_t slice_start = 0;  //  74
    float pixdim[8] = {};          //  76
    float vox_offset = 352;        // 108
    float scl_slope = 0;           // 112
    float scl_inter = 0;           // 116
    std::int16_t slice_end = 0;    // 120
    char slice_code = 0;           // 122
    char xyzt_units = 0;           // 123
    float cal_max = 0;             // 124
    float cal_min = 0;             // 128
    float slice_duration = 0;      // 132
    float toffset = 0;             // 136
    std::int32_t glmax = 0;        // 140
    std::int32_t glmin = 0;        // 144
    char descrip[80] = {};         // 148
    char aux_file[24] = {};        // 228
    std::int16_t qform_code = 0;   // 252
    std::int16_t sform_code = 0;   // 254
    float quatern_b = 0;           // 256
    float quatern_c = 0;           // 260
    float quatern_d = 0;           // 264
    float qoffset_x = 0;           // 268
    float qoffset_y = 0;           // 272
    float qoffset_z = 0;           // 276
    float srow_x[4] = {};          // 280
    float srow_y[4] = {};          // 296
    float srow_z[4] = {};          // 312
    char intent_name[16] = {};     // 328
    char magic[4] = {};            // 344
};
#pragma pack(pop)

static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must pack to 348");
static_assert(std::endian::native == std::endian::little,
              "reader/writer assumes a little-endian host");

constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

enum class NiftiDatatype { float32, float64 };

namespace detail {

inline Nifti1Header read_header(std::ifstream& in, const std::string& path) {
    Nifti1Header hdr{};
    in.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));
    const unsigned char* b = reinterpret_cast<const unsigned char*>(&hdr);
    if (in.gcount() >= 2 && b[0] == 0x1f && b[1] == 0x8b)
        throw FormatError(path + ": gzip-compressed input not supported", 0);
    if (in.gcount() != static_cast<std::streamsize>(sizeof(hdr)))
        throw FormatError(path + ": truncated header",
                          static_cast<std::size_t>(in.gcount()));
    if (hdr.sizeof_hdr != 348) {
        std::int32_t swapped;
        std::memcpy(&swapped, &hdr.sizeof_hdr, 4);
        swapped = static_cast<std::int32_t>(
            __builtin_bswap32(static_cast<std::uint32_t>(swapped)));
        if (swapped == 348)
            throw FormatError(path + ": big-endian NIfTI-1 not supported", 0);
        throw FormatError(path + ": not a NIfTI-1 file (sizeof_hdr != 348)",
                          0);
    }
    if (std::memcmp(hdr.magic, "n+1", 4) != 0) {
        if (std::memcmp(hdr.magic, "ni1", 4) == 0)
            throw FormatError(
                path + ": paired NIfTI-1 (.hdr/.img) not supported", 344);
        throw FormatError(path + ": bad magic (expected \"n+1\")", 344);
    }
    if (hdr.datatype != kDtFloat32 && hdr.datatype != kDtFloat64)
        throw FormatError(path + ": unsupported datatype " +
                              std::to_string(hdr.datatype) +
                              " (need float32 or float64)",
                          70);
    if (hdr.dim[0] != 3 && hdr.dim[0] != 4)
        throw FormatError(path + ": dim[0] must be 3 or 4, got " +
                              std::to_string(hdr.dim[0]),
                          40);
    for (int i = 1; i <= hdr.dim[0]; ++i)
        if (hdr.dim[i] < 1)
            throw FormatError(path + ": nonpositive dim[" +
                                  std::to_string(i) + "]",
                              40 + 2 * static_cast<std::size_t>(i));
    if (hdr.vox_offset < 352.0f)
        throw FormatError(path + ": vox_offset below 352", 108);
    return hdr;
}

inline std::vector<double> read_payload(std::ifstream& in,
                                        const Nifti1Header& hdr,
                                        std::size_t n,
                                        const std::string& path) {
    const std::size_t vox_offset = static_cast<std::size_t>(hdr.vox_offset);
    const std::size_t elem = hdr.datatype == kDtFloat64 ? 8 : 4;
    in.seekg(0, std::ios::end);
    const std::size_t file_size = static_cast<std::size_t>(in.tellg());
    if (file_size < vox_offset + n * elem)
        throw FormatError(path + ": payload truncated, need " +
                              std::to_string(n * elem) + " bytes",
                          file_size);
    in.seekg(static_cast<std::streamoff>(vox_offset));
    std::vector<double> out(n);
    if (hdr.datatype == kDtFloat64) {
        in.read(reinterpret_cast<char*>(out.data()),
                static_cast<std::streamsize>(n * 8));
    } else {
        std::vector<float> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n * 4));
        for (std::size_t i = 0; i < n; ++i)
            out[i] = static_cast<double>(buf[i]);
    }
    if (!in)
        throw FormatError(path + ": payload read failed", vox_offset);
    // scl_slope == 0 means no scaling; identity scaling skipped so float64
    // round trips stay bit-exact
    const double slope = static_cast<double>(hdr.scl_slope);
    const double inter = static_cast<double>(hdr.scl_inter);
    if (std::isfinite(slope) && slope != 0.0 &&
        !(slope == 1.0 && inter == 0.0)) {
        for (double& v : out)
            v = slope * v + inter;
    }
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingInputError(path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInputError(path);
    return in;
}

inline void write_file(const Nifti1Header& hdr,
                       const std::vector<double>& data,
                       NiftiDatatype dtype, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
    const char pad[4] = {0, 0, 0, 0}; // no header extensions
    out.write(pad, 4);
    if (dtype == NiftiDatatype::float64) {
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * 8));
    } else {
        std::vector<float> buf(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            buf[i] = static_cast<float>(data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * 4));
    }
    if (!out)
        throw ValidationError("write failed: " + path);
}

inline Nifti1Header make_header(const Dims4& dims, bool four_d,
                                const std::array<double, 3>& vox_mm,
                                double tr_seconds, NiftiDatatype dtype) {
    Nifti1Header hdr{};
    hdr.dim[0] = four_d ? 4 : 3;
    hdr.dim[1] = static_cast<std::int16_t>(dims.nx);
    hdr.dim[2] = static_cast<std::int16_t>(dims.ny);
    hdr.dim[3] = static_cast<std::int16_t>(dims.nz);
    hdr.dim[4] = four_d ? static_cast<std::int16_t>(dims.nt) : 1;
    for (int i = hdr.dim[0] + 1; i < 8; ++i)
        hdr.dim[i] = 1;
    hdr.pixdim[0] = 1.0f;
    hdr.pixdim[1] = static_cast<float>(vox_mm[0]);
    hdr.pixdim[2] = static_cast<float>(vox_mm[1]);
    hdr.pixdim[3] = static_cast<float>(vox_mm[2]);
    hdr.pixdim[4] = four_d ? static_cast<float>(tr_seconds) : 0.0f;
    hdr.datatype = dtype == NiftiDatatype::float64 ? kDtFloat64 : kDtFloat32;
    hdr.bitpix = dtype == NiftiDatatype::float64 ? 64 : 32;
    hdr.vox_offset = 352.0f;
    hdr.scl_slope = 1.0f;
    hdr.scl_inter = 0.0f;
    hdr.xyzt_units = 2 | 8; // mm, seconds
    hdr.sform_code = 1;
    hdr.srow_x[0] = static_cast<float>(vox_mm[0]);
    hdr.srow_y[1] = static_cast<float>(vox_mm[1]);
    hdr.srow_z[2] = static_cast<float>(vox_mm[2]);
    std::memcpy(hdr.descrip, "neuroglm", 8);
    std::memcpy(hdr.magic, "n+1", 4);
    return hdr;
}

} // namespace detail

inline Volume4D read_volume4d(const std::string& path) {
    auto in = detail::open_input(path);
    const Nifti1Header hdr = detail::read_header(in, path);
    if (hdr.dim[0] != 4)
        throw FormatError(path + ": expected a 4-D volume, got dim[0]=" +
                              std::to_string(hdr.dim[0]),
                          40);
    Volume4D vol;
    vol.dims = {static_cast<std::size_t>(hdr.dim[1]),
                static_cast<std::size_t>(hdr.dim[2]),
                static_cast<std::size_t>(hdr.dim[3]),
                static_cast<std::size_t>(hdr.dim[4])};
    vol.voxel_size_mm = {static_cast<double>(hdr.pixdim[1]),
                         static_cast<double>(hdr.pixdim[2]),
                         static_cast<double>(hdr.pixdim[3])};
    vol.tr_seconds = static_cast<double>(hdr.pixdim[4]);
    if (!(vol.tr_seconds > 0.0))
        throw FormatError(path + ": pixdim[4] (TR) must be positive", 92);
    vol.data =
        detail::read_payload(in, hdr, vol.dims.nvox() * vol.dims.nt, path);
    vol.validate();
    return vol;
}

/// Reads a 3-D map (a trailing singleton 4th dimension is tolerated).
inline ScalarMap read_scalar_map(const std::string& path,
                                 MapKind kind = MapKind::contrast) {
    auto in = detail::open_input(path);
    const Nifti1Header hdr = detail::read_header(in, path);
    if (hdr.dim[0] == 4 && hdr.dim[4] != 1)
        throw FormatError(path + ": expected a 3-D map, got nt=" +
                              std::to_string(hdr.dim[4]),
                          48);
    ScalarMap map;
    map.dims = {static_cast<std::size_t>(hdr.dim[1]),
                static_cast<std::size_t>(hdr.dim[2]),
                static_cast<std::size_t>(hdr.dim[3])};
    map.kind = kind;
    map.data = detail::read_payload(in, hdr, map.dims.nvox(), path);
    map.validate();
    return map;
}

inline std::array<double, 3> read_voxel_size(const std::string& path) {
    auto in = detail::open_input(path);
    const Nifti1Header hdr = detail::read_header(in, path);
    return {static_cast<double>(hdr.pixdim[1]),
            static_cast<double>(hdr.pixdim[2]),
            static_cast<double>(hdr.pixdim[3])};
}

inline void write_nifti(const Volume4D& vol, const std::string& path,
                        NiftiDatatype dtype = NiftiDatatype::float64) {
    vol.validate();
    for (std::size_t d : {vol.dims.nx, vol.dims.ny, vol.dims.nz, vol.dims.nt})
        if (d > 32767)
            throw ValidationError("dimension too large for NIfTI-1 short");
    const Nifti1Header hdr = detail::make_header(
        vol.dims, true, vol.voxel_size_mm, vol.tr_seconds, dtype);
    detail::write_file(hdr, vol.data, dtype, path);
}

inline void write_nifti(const ScalarMap& map, const std::string& path,
                        const std::array<double, 3>& vox_mm = {2.0, 2.0, 2.0},
                        NiftiDatatype dtype = NiftiDatatype::float64) {
    map.validate();
    for (std::size_t d : {map.dims.nx, map.dims.ny, map.dims.nz})
        if (d > 32767)
            throw ValidationError("dimension too large for NIfTI-1 short");
    const Dims4 d4{map.dims.nx, map.dims.ny, map.dims.nz, 1};
    const Nifti1Header hdr =
        detail::make_header(d4, false, vox_mm, 0.0, dtype);
    detail::write_file(hdr, map.data, dtype, path);
}

/// Writes a mask as a 0/1 float map.
inline void write_nifti(const BrainMask& mask, const std::string& path,
                        const std::array<double, 3>& vox_mm = {2.0, 2.0,
                                                               2.0}) {
    ScalarMap map(mask.dims, MapKind::probability);
    for (std::size_t i : mask.voxel_index)
        map.data[i] = 1.0;
    write_nifti(map, path, vox_mm);
}

/// Reads a 0/1 (or thresholded at 0.5) map back into a mask.
inline BrainMask read_mask(const std::string& path) {
    const ScalarMap map = read_scalar_map(path, MapKind::probability);
    BrainMask mask(map.dims, false);
    for (std::size_t i = 0; i < map.data.size(); ++i)
        mask.included[i] = map.data[i] >= 0.5 ? 1 : 0;
    mask.rebuild_index();
    return mask;
}

} // namespace neuroglm::io
