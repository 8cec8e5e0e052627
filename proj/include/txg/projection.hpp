#pragma once

#include "txg/grid.hpp"
#include "txg/image.hpp"

namespace txg {

/// Splat a front-view image into a sparse grid: every valid pixel lands in
/// the voxel containing its 3D position; each touched voxel stores the mean
/// of its contributing pixel colors. Order-independent by construction.
SparseAttributeGrid project_image_to_grid(const TextureImage& img, const PositionMap& vpm,
                                          uint32_t resolution);

} // namespace txg
