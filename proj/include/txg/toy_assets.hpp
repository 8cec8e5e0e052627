#pragma once

#include <functional>

#include "txg/grid.hpp"
#include "txg/mesh.hpp"

namespace txg {

/// Square in the z=0 plane, |x|,|y| <= half, full [0,1]^2 UV coverage.
TriangleMesh toy_quad(double half = 0.4);

/// Axis-aligned cube, faces laid out on a 3x2 UV atlas.
TriangleMesh toy_cube(double half = 0.3);

/// Latitude/longitude sphere. radius 0.2 at R=32 gives on the order of 500
/// surface voxels.
TriangleMesh toy_sphere(double radius = 0.2, int stacks = 12, int slices = 24);

using AttributeFn = std::function<std::vector<float>(const Vec3& cell_center)>;

/// Voxelize the mesh surface and fill each cell from the given function of
/// its center position (in [-0.5, 0.5]^3).
SparseAttributeGrid make_attribute_grid(const TriangleMesh& mesh, uint32_t resolution,
                                        ChannelLayout layout, const AttributeFn& fn);

/// Smooth position-derived RGB field over the surface voxels; the standard
/// training asset for overfit runs.
SparseAttributeGrid toy_color_grid(const TriangleMesh& mesh, uint32_t resolution);

/// Deterministic family of distinct small assets for conditional-training
/// micro-tasks. Index selects shape and color-field phase.
TriangleMesh toy_asset_mesh(int index);
SparseAttributeGrid toy_asset_grid(int index, uint32_t resolution);

/// Two-part label grid: the semantic span holds palette color 0 where the
/// cell center has x < 0, color 1 otherwise. Layout: 3 color + 3 semantic.
SparseAttributeGrid toy_label_grid(const TriangleMesh& mesh, uint32_t resolution,
                                   const std::array<float, 3>& color_neg,
                                   const std::array<float, 3>& color_pos);

} // namespace txg
