#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "txg/mesh.hpp"

namespace txg {

struct VoxelCoord {
    int32_t ix = 0, iy = 0, iz = 0;

    friend bool operator==(const VoxelCoord&, const VoxelCoord&) = default;
    // lexicographic, z fastest
    friend bool operator<(const VoxelCoord& a, const VoxelCoord& b) {
        if (a.ix != b.ix) return a.ix < b.ix;
        if (a.iy != b.iy) return a.iy < b.iy;
        return a.iz < b.iz;
    }
};

/// Named channel spans of an attribute vector: color / semantic / pbr / extra.
struct ChannelLayout {
    uint32_t k_color = 0;
    uint32_t k_semantic = 0;
    uint32_t k_pbr = 0;
    uint32_t k_extra = 0;

    uint32_t total() const { return k_color + k_semantic + k_pbr + k_extra; }
    friend bool operator==(const ChannelLayout&, const ChannelLayout&) = default;

    /// Offset and width of a named span ("color", "semantic", "pbr", "extra",
    /// "all"). Throws on unknown names or empty spans.
    std::pair<uint32_t, uint32_t> span(const std::string& name) const;
};

ChannelLayout color_layout(uint32_t k_color = 3);

struct QueryPoint {
    double x = 0, y = 0, z = 0; // each in [-0.5, 0.5]
};

/// Trilinear query result: interpolated attributes plus the total weight of
/// corners absent from the sparse grid.
struct TrilinearSample {
    std::vector<double> values;
    double missing_mass = 0.0;
};

struct TrilinearOptions {
    bool renormalize = false;          // divide by present mass when < 1
    std::vector<float> fill;           // value for absent corners; empty = zeros
};

/// One stencil tap: entry row in the grid (or -1 if absent) and its weight.
struct StencilTap {
    int64_t row = -1;
    double weight = 0.0;
};

/// Sparse map voxel coordinate -> k-channel attribute vector, stored as a
/// sorted coordinate array with a parallel attribute array. Iteration order
/// is strictly lexicographic (z fastest).
class SparseAttributeGrid {
public:
    SparseAttributeGrid(uint32_t resolution, ChannelLayout layout);

    uint32_t resolution() const { return resolution_; }
    const ChannelLayout& layout() const { return layout_; }
    uint32_t channels() const { return layout_.total(); }
    size_t size() const { return coords_.size(); }
    bool empty() const { return coords_.empty(); }

    const std::vector<VoxelCoord>& coords() const { return coords_; }
    const std::vector<float>& attributes() const { return attributes_; }
    std::vector<float>& attributes() { return attributes_; }

    /// Insert or replace the vector at c. Throws on bad bounds or length.
    void insert(const VoxelCoord& c, const std::vector<float>& a);

    /// Row index of c, or nullopt if absent. O(log M).
    std::optional<size_t> find(const VoxelCoord& c) const;
    const float* row(size_t i) const { return attributes_.data() + i * channels(); }
    VoxelCoord coord(size_t i) const { return coords_[i]; }

    TrilinearSample trilinear_query(const QueryPoint& p,
                                    const TrilinearOptions& opt = {}) const;
    std::vector<TrilinearSample> batch_query(const std::vector<QueryPoint>& points,
                                             const TrilinearOptions& opt = {}) const;

    /// The 8-corner gather stencil at p: base cell, per-corner rows and
    /// weights. Shared by the query path and the differentiable renderer.
    std::array<StencilTap, 8> stencil(const QueryPoint& p) const;

    /// Bulk construction from parallel coord/attribute arrays; sorts and
    /// rejects duplicates.
    static SparseAttributeGrid from_rows(uint32_t resolution, ChannelLayout layout,
                                         std::vector<VoxelCoord> coords,
                                         std::vector<float> attributes);

private:
    void check_coord(const VoxelCoord& c) const;

    uint32_t resolution_;
    ChannelLayout layout_;
    std::vector<VoxelCoord> coords_;
    std::vector<float> attributes_; // size() * channels()
};

/// Voxels whose cell intersects at least one triangle (conservative
/// triangle-box overlap, boundary-inclusive). Returned sorted.
std::vector<VoxelCoord> voxelize_surface(const TriangleMesh& mesh, uint32_t resolution);

/// TXGRID binary format (magic "TXG1", little-endian).
void save_txgrid(const SparseAttributeGrid& grid, const std::string& path);
SparseAttributeGrid load_txgrid(const std::string& path);

} // namespace txg
