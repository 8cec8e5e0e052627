#pragma once

#include <array>
#include <functional>

#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/mesh.hpp"
#include "txg/rng.hpp"

namespace txg {

/// One view's over-segmentation: integer region ids per pixel (0 =
/// background, ids contiguous from 1) with row-aligned per-region features
/// (row i belongs to id i+1) and pixel counts.
struct RegionMask {
    uint32_t width = 0, height = 0;
    std::vector<int> labels; // width*height, bottom row first
    std::vector<std::vector<double>> features;
    std::vector<size_t> pixel_counts;

    int region_count() const { return int(features.size()); }
    int& at(uint32_t x, uint32_t y) { return labels[size_t(y) * width + x]; }
    int at(uint32_t x, uint32_t y) const { return labels[size_t(y) * width + x]; }
};

struct RegionMaskSet {
    std::vector<RegionMask> views;
};

using RegionFeatureFn =
    std::function<std::vector<double>(const TextureImage&, const RegionMask&, int id)>;

/// Default extractor: mean RGB concatenated with a per-channel 8-bin
/// histogram (normalized), 27 dims. Stand-in for a pretrained 2D feature
/// backbone; swap via the RegionFeatureFn overloads.
std::vector<double> default_region_features(const TextureImage& img, const RegionMask& mask,
                                            int id);

/// Fills features/pixel_counts for every region of the mask from the image.
void compute_region_features(const TextureImage& img, RegionMask& mask,
                             const RegionFeatureFn& fn = default_region_features);

/// Greedy agglomeration per view: repeatedly merge the 4-adjacent region
/// pair with the highest cosine feature similarity >= tau (ties: smaller id
/// pair), recomputing features as pixel-count-weighted means. Ids are
/// re-compacted afterwards.
RegionMaskSet merge_regions(const RegionMaskSet& masks, double tau);
RegionMask merge_regions(const RegionMask& mask, double tau);

/// Raw 3-channel label colors sampled from the grid per mesh face.
struct RawFaceLabels {
    std::vector<std::array<double, 3>> labels;
    std::vector<uint8_t> fallback; // 1 where the nearest-voxel fallback fired
};

/// Samples the grid's semantic span (color span when no semantic channels
/// exist) at each face's centroid and 3 edge midpoints; the face label is the
/// mean of the largest single-linkage cluster of the supported samples.
/// Faces with no supported sample take the nearest voxel's value and are
/// flagged.
RawFaceLabels assign_labels(const SparseAttributeGrid& grid, const TriangleMesh& mesh,
                            double sample_eps = 0.1);

struct PartSegmentation {
    std::vector<int> face_part;                   // one id in [0, P) per face
    std::vector<std::array<double, 3>> centers;   // per part, mean label color
    int part_count = 0;
};

/// Single-linkage agglomerative clustering in label space: parts are the
/// connected components of the graph joining labels at distance <= eps.
/// Part ids follow first-face order; centers are member means.
PartSegmentation cluster_labels(const std::vector<std::array<double, 3>>& raw, double eps);

/// Class-agnostic mIoU: area-weighted IoU matrix between predicted and
/// ground-truth parts, optimal one-to-one assignment (Hungarian), mean of
/// the matched IoU over ground-truth parts; unmatched gt parts score 0.
double miou(const PartSegmentation& pred, const PartSegmentation& gt,
            const std::vector<double>& face_areas);

/// Maximum-sum one-to-one assignment on a score matrix [rows][cols].
/// Returns per-row matched column or -1. Exact (Hungarian O(n^3)).
std::vector<int> hungarian_match(const std::vector<std::vector<double>>& score);

/// Random label palette with minimum pairwise euclidean distance (default
/// 0.2) in [0,1]^3; throws if the constraint cannot be met.
std::vector<std::array<float, 3>> random_palette(size_t n, Rng& rng, double min_dist = 0.2);

/// Per-face id list, one id per line, face order = mesh face order.
void save_part_ids(const PartSegmentation& seg, const std::string& path);
std::vector<int> load_part_ids(const std::string& path);

/// Color-coded UV texture: each texel covered by a face takes its part's
/// palette color (same rasterization rules as position-map baking).
TextureImage part_texture(const PartSegmentation& seg, const TriangleMesh& mesh,
                          uint32_t width, uint32_t height,
                          const std::vector<std::array<float, 3>>& palette);

} // namespace txg
