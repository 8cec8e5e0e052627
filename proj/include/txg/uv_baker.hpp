#pragma once

#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/mesh.hpp"

namespace txg {

struct BakeStats {
    size_t degenerate_triangles = 0;
};

/// Rasterize each UV triangle at texel centers ((i+0.5)/W, (j+0.5)/H), v = 0
/// at the bottom row. Covered texels store the barycentric interpolation of
/// the triangle's 3D vertices; overlaps resolve last-triangle-wins by mesh
/// order. Zero-area UV triangles are skipped and counted.
/// face_ids, when given, receives the covering face index per texel (-1
/// where invalid).
PositionMap bake_position_map(const TriangleMesh& mesh, uint32_t width, uint32_t height,
                              BakeStats* stats = nullptr,
                              std::vector<int32_t>* face_ids = nullptr);

/// Per valid texel: trilinear_query(grid, position) restricted to the named
/// channel span. Invalid texels stay zero/invalid.
TextureImage bake_texture(const SparseAttributeGrid& grid, const PositionMap& posmap,
                          const std::string& span = "color",
                          const TrilinearOptions& opt = {});

/// Seam padding: invalid texels with at least one valid 8-neighbor take the
/// mean of those neighbors and become valid; repeated `iterations` times.
TextureImage dilate_texture(const TextureImage& img, uint32_t iterations);

} // namespace txg
