#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "neuroglm/errors.hpp"

// Core spatial types. Voxel ordering is fixed as x-fastest everywhere so that
// linear indices (and hence feature-vector positions and selection records)
// are portable across runs and tools.

namespace neuroglm {

struct Dims3 {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t nvox() const { return nx * ny * nz; }
    bool operator==(const Dims3&) const = default;
    std::string str() const {
        return std::to_string(nx) + "x" + std::to_string(ny) + "x" +
               std::to_string(nz);
    }
};

struct Dims4 {
    std::size_t nx = 0, ny = 0, nz = 0, nt = 0;

    Dims3 spatial() const { return {nx, ny, nz}; }
    std::size_t nvox() const { return nx * ny * nz; }
    bool operator==(const Dims4&) const = default;
};

/// x-fastest linear index of (x, y, z).
inline std::size_t linear_index(std::size_t x, std::size_t y, std::size_t z,
                                const Dims3& dims) {
    if (x >= dims.nx || y >= dims.ny || z >= dims.nz)
        throw IndexError("voxel (" + std::to_string(x) + "," +
                         std::to_string(y) + "," + std::to_string(z) +
                         ") outside grid " + dims.str());
    return x + dims.nx * (y + dims.ny * z);
}

/// Inverse of linear_index.
inline std::array<std::size_t, 3> coordinates(std::size_t i,
                                              const Dims3& dims) {
    if (i >= dims.nvox())
        throw IndexError("linear index " + std::to_string(i) +
                         " outside grid " + dims.str());
    const std::size_t x = i % dims.nx;
    const std::size_t y = (i / dims.nx) % dims.ny;
    const std::size_t z = i / (dims.nx * dims.ny);
    return {x, y, z};
}

/// One subject's BOLD series: (nx, ny, nz) grid, nt scans, x-fastest with the
/// scan index slowest, i.e. data[voxel + nvox * t].
struct Volume4D {
    Dims4 dims;
    std::array<double, 3> voxel_size_mm{2.0, 2.0, 2.0};
    double tr_seconds = 0.0;
    std::vector<double> data;

    Volume4D() = default;
    Volume4D(Dims4 d, double tr, std::array<double, 3> vox = {2.0, 2.0, 2.0})
        : dims(d), voxel_size_mm(vox), tr_seconds(tr),
          data(d.nvox() * d.nt, 0.0) {
        validate_header();
    }

    void validate_header() const {
        if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0 || dims.nt == 0)
            throw DimsError("Volume4D dimensions must be positive");
        if (!(tr_seconds > 0.0))
            throw ValidationError("Volume4D tr_seconds must be positive");
        for (double v : voxel_size_mm)
            if (!(v > 0.0))
                throw ValidationError("Volume4D voxel size must be positive");
    }

    void validate() const {
        validate_header();
        if (data.size() != dims.nvox() * dims.nt)
            throw DimsError("Volume4D data length " +
                            std::to_string(data.size()) + " != nx*ny*nz*nt");
        for (double v : data)
            if (!std::isfinite(v))
                throw ValidationError("Volume4D contains non-finite values");
    }

    double& at(std::size_t x, std::size_t y, std::size_t z, std::size_t t) {
        return data[voxel_scan_index(x, y, z, t)];
    }
    double at(std::size_t x, std::size_t y, std::size_t z,
              std::size_t t) const {
        return data[voxel_scan_index(x, y, z, t)];
    }

    std::size_t voxel_scan_index(std::size_t x, std::size_t y, std::size_t z,
                                 std::size_t t) const {
        if (t >= dims.nt)
            throw IndexError("scan index " + std::to_string(t) +
                             " outside nt=" + std::to_string(dims.nt));
        return linear_index(x, y, z, dims.spatial()) + dims.nvox() * t;
    }

    /// Copy of the time series at spatial linear index v.
    std::vector<double> timeseries(std::size_t v) const {
        if (v >= dims.nvox())
            throw IndexError("voxel index " + std::to_string(v) +
                             " outside grid");
        std::vector<double> y(dims.nt);
        const std::size_t stride = dims.nvox();
        for (std::size_t t = 0; t < dims.nt; ++t)
            y[t] = data[v + stride * t];
        return y;
    }
};

enum class MapKind {
    tmap_speech_gt_silence,
    tmap_silence_gt_speech,
    contrast,
    probability,
    atlas_probability,
    atlas_labels,
};

inline bool is_tmap(MapKind k) {
    return k == MapKind::tmap_speech_gt_silence ||
           k == MapKind::tmap_silence_gt_speech;
}
inline bool is_probability(MapKind k) {
    return k == MapKind::probability || k == MapKind::atlas_probability;
}

/// One scalar per voxel, x-fastest.
struct ScalarMap {
    Dims3 dims;
    MapKind kind = MapKind::contrast;
    std::vector<double> data;

    ScalarMap() = default;
    ScalarMap(Dims3 d, MapKind k, double fill = 0.0)
        : dims(d), kind(k), data(d.nvox(), fill) {}

    void validate() const {
        if (data.size() != dims.nvox())
            throw DimsError("ScalarMap data length " +
                            std::to_string(data.size()) + " != nx*ny*nz");
        for (double v : data) {
            if (!std::isfinite(v))
                throw ValidationError("ScalarMap contains non-finite values");
            if (is_probability(kind) && (v < 0.0 || v > 1.0))
                throw ValidationError(
                    "probability map value outside [0,1]: " +
                    std::to_string(v));
            if (is_tmap(kind) && v < 0.0)
                throw ValidationError("t-map value negative: " +
                                      std::to_string(v));
        }
    }

    double& at(std::size_t x, std::size_t y, std::size_t z) {
        return data[linear_index(x, y, z, dims)];
    }
    double at(std::size_t x, std::size_t y, std::size_t z) const {
        return data[linear_index(x, y, z, dims)];
    }
};

/// Binary voxel mask plus the stable (ascending linear index) ordering of
/// included voxels that every feature vector follows.
struct BrainMask {
    Dims3 dims;
    std::vector<std::uint8_t> included; // one per voxel
    std::vector<std::size_t> voxel_index; // ascending linear indices

    BrainMask() = default;
    explicit BrainMask(Dims3 d, bool fill = false)
        : dims(d), included(d.nvox(), fill ? 1 : 0) {
        rebuild_index();
    }

    static BrainMask full(Dims3 d) { return BrainMask(d, true); }

    void rebuild_index() {
        if (included.size() != dims.nvox())
            throw DimsError("BrainMask bitmap length != nx*ny*nz");
        voxel_index.clear();
        for (std::size_t i = 0; i < included.size(); ++i)
            if (included[i])
                voxel_index.push_back(i);
    }

    std::size_t count() const { return voxel_index.size(); }
    bool contains(std::size_t i) const {
        return i < included.size() && included[i] != 0;
    }

    void set(std::size_t x, std::size_t y, std::size_t z, bool on) {
        included[linear_index(x, y, z, dims)] = on ? 1 : 0;
    }
};

using FeatureVector = std::vector<double>;

/// Masked-map values in voxel_index order; the basic feature extraction step.
inline FeatureVector extract_features(const ScalarMap& map,
                                      const BrainMask& mask) {
    if (map.dims != mask.dims)
        throw DimsError("extract_features: map dims " + map.dims.str() +
                        " != mask dims " + mask.dims.str());
    if (mask.count() == 0)
        throw EmptyMaskError("extract_features: mask includes no voxels");
    FeatureVector out;
    out.reserve(mask.count());
    for (std::size_t i : mask.voxel_index)
        out.push_back(map.data[i]);
    return out;
}

/// Inverse of extract_features onto a zero map (outside-mask voxels stay 0).
inline ScalarMap scatter_features(const FeatureVector& values,
                                  const BrainMask& mask, MapKind kind) {
    if (values.size() != mask.count())
        throw DimsError("scatter_features: value count " +
                        std::to_string(values.size()) + " != mask count " +
                        std::to_string(mask.count()));
    ScalarMap out(mask.dims, kind);
    for (std::size_t k = 0; k < values.size(); ++k)
        out.data[mask.voxel_index[k]] = values[k];
    return out;
}

} // namespace neuroglm
