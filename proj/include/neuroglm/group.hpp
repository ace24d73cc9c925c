#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "neuroglm/errors.hpp"
#include "neuroglm/stats.hpp"
#include "neuroglm/volume.hpp"

// Cross-subject operations: group significance mask, selection-probability
// maps, cluster ranking, atlas overlap summaries.

namespace neuroglm::group {

enum class MaskMode {
    ttest,        // one-sample t across subjects, include iff p < alpha
    intersection, // per-subject value > tau in at least min_subjects maps
};

struct GroupMaskConfig {
    MaskMode mode = MaskMode::ttest;
    double alpha = 0.001; // one-sided, greater than zero
    double tau = 0.0; // intersection mode threshold
    std::size_t min_subjects = 0; // intersection mode; 0 means all
};

/// Voxelwise one-sample t-test (or per-subject threshold intersection)
/// across subject maps.
inline BrainMask group_mask(const std::vector<ScalarMap>& maps,
                            const GroupMaskConfig& cfg = {}) {
    if (maps.size() < 3)
        throw ValidationError("group_mask: needs at least 3 subjects, got " +
                              std::to_string(maps.size()));
    if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5))
        throw ValidationError("group_mask: alpha must lie in (0, 0.5)");
    const Dims3 dims = maps.front().dims;
    for (const auto& m : maps)
        if (!(m.dims == dims))
            throw DimsError("group_mask: subject maps disagree on dims");

    const std::size_t n = maps.size();
    const std::size_t need =
        cfg.min_subjects == 0 ? n : std::min(cfg.min_subjects, n);
    BrainMask mask(dims);
    std::vector<double> values(n);
    for (std::size_t v = 0; v < dims.nvox(); ++v) {
        if (cfg.mode == MaskMode::intersection) {
            std::size_t hits = 0;
            for (std::size_t s = 0; s < n; ++s)
                if (maps[s].data[v] > cfg.tau)
                    ++hits;
            mask.included[v] = hits >= need ? 1 : 0;
            continue;
        }
        for (std::size_t s = 0; s < n; ++s)
            values[s] = maps[s].data[v];
        const auto t = stats::one_sample_t_greater(values);
        mask.included[v] = t.p_greater < cfg.alpha ? 1 : 0;
    }
    mask.rebuild_index();
    return mask;
}

/// Fraction of iterations in which each in-mask voxel was selected.
inline ScalarMap selection_probability_map(
    const std::vector<std::vector<std::size_t>>& selected_sets,
    const BrainMask& mask, std::size_t n_iter) {
    if (n_iter == 0)
        throw ValidationError("selection_probability_map: n_iter must be > 0");
    if (selected_sets.size() > n_iter)
        throw ValidationError(
            "selection_probability_map: more sets than iterations");
    ScalarMap out(mask.dims, MapKind::probability);
    std::vector<std::size_t> counts(mask.dims.nvox(), 0);
    for (const auto& set : selected_sets) {
        for (std::size_t idx : set) {
            if (idx >= mask.dims.nvox() || !mask.included[idx])
                throw IndexError("selection_probability_map: voxel " +
                                 std::to_string(idx) + " outside mask");
            ++counts[idx];
        }
    }
    for (std::size_t v = 0; v < counts.size(); ++v)
        out.data[v] = static_cast<double>(counts[v]) /
                      static_cast<double>(n_iter);
    return out;
}

struct Cluster {
    std::size_t peak_index = 0; // smallest linear index achieving the peak
    std::size_t size = 0;
    double peak_value = 0.0;
    double mean_value = 0.0;
    std::vector<std::size_t> members; // sorted linear indices
};

/// Connected components (26-neighborhood) of the strictly positive part of
/// the map, ranked by peak value, then size, then peak index.
inline std::vector<Cluster> top_clusters(const ScalarMap& map,
                                         std::size_t k) {
    if (k < 1)
        throw ValidationError("top_clusters: k must be >= 1");
    const Dims3 d = map.dims;
    std::vector<std::size_t> label(d.nvox(), 0); // 0 = unvisited/background
    std::vector<Cluster> clusters;
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < d.nvox(); ++seed) {
        if (label[seed] != 0 || !(map.data[seed] > 0.0))
            continue;
        Cluster c;
        c.peak_value = map.data[seed];
        c.peak_index = seed;
        double sum = 0.0;
        stack.assign(1, seed);
        label[seed] = clusters.size() + 1;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            c.members.push_back(v);
            sum += map.data[v];
            if (map.data[v] > c.peak_value ||
                (map.data[v] == c.peak_value && v < c.peak_index)) {
                c.peak_value = map.data[v];
                c.peak_index = v;
            }
            const auto [x, y, z] = coordinates(v, d);
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0 && dz == 0)
                            continue;
                        const long nx = static_cast<long>(x) + dx;
                        const long ny = static_cast<long>(y) + dy;
                        const long nz = static_cast<long>(z) + dz;
                        if (nx < 0 || ny < 0 || nz < 0 ||
                            nx >= static_cast<long>(d.nx) ||
                            ny >= static_cast<long>(d.ny) ||
                            nz >= static_cast<long>(d.nz))
                            continue;
                        const std::size_t w = linear_index(
                            static_cast<std::size_t>(nx),
                            static_cast<std::size_t>(ny),
                            static_cast<std::size_t>(nz), d);
                        if (label[w] == 0 && map.data[w] > 0.0) {
                            label[w] = label[seed];
                            stack.push_back(w);
                        }
                    }
        }
        c.size = c.members.size();
        c.mean_value = sum / static_cast<double>(c.size);
        std::sort(c.members.begin(), c.members.end());
        clusters.push_back(std::move(c));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  if (a.peak_value != b.peak_value)
                      return a.peak_value > b.peak_value;
                  if (a.size != b.size)
                      return a.size > b.size;
                  return a.peak_index < b.peak_index;
              });
    if (clusters.size() > k)
        clusters.resize(k);
    return clusters;
}

/// |mask ∩ {atlas P > threshold}| / |{atlas P > threshold}|.
inline double atlas_overlap(const BrainMask& mask,
                            const ScalarMap& atlas_prob,
                            double p_threshold = 0.1) {
    if (!(mask.dims == atlas_prob.dims))
        throw DimsError("atlas_overlap: mask and atlas dims disagree");
    std::size_t atlas_n = 0, both = 0;
    for (std::size_t v = 0; v < mask.dims.nvox(); ++v) {
        if (atlas_prob.data[v] > p_threshold) {
            ++atlas_n;
            if (mask.included[v])
                ++both;
        }
    }
    if (atlas_n == 0)
        throw DivisionError(
            "atlas_overlap: no atlas voxels above threshold");
    return static_cast<double>(both) / static_cast<double>(atlas_n);
}

struct RegionDistribution {
    std::map<long, double> fraction_by_region; // code -> fraction of mask
    double unlabeled_fraction = 0.0; // label code 0
};

/// Share of mask voxels falling in each labelled atlas region.
inline RegionDistribution region_distribution(const BrainMask& mask,
                                              const ScalarMap& labels) {
    if (!(mask.dims == labels.dims))
        throw DimsError("region_distribution: mask and label dims disagree");
    const std::size_t total = mask.count();
    if (total == 0)
        throw EmptyMaskError("region_distribution: empty mask");
    std::map<long, std::size_t> counts;
    std::size_t unlabeled = 0;
    for (std::size_t v = 0; v < mask.dims.nvox(); ++v) {
        if (!mask.included[v])
            continue;
        const long code = std::lround(labels.data[v]);
        if (code == 0)
            ++unlabeled;
        else
            ++counts[code];
    }
    RegionDistribution out;
    for (const auto& [code, n] : counts)
        out.fraction_by_region[code] =
            static_cast<double>(n) / static_cast<double>(total);
    out.unlabeled_fraction =
        static_cast<double>(unlabeled) / static_cast<double>(total);
    return out;
}

} // namespace neuroglm::group
