#pragma once

#include "txg/grid.hpp"
#include "txg/nn/tensor.hpp"

namespace txg {

/// Occupancy sets at resolutions R, R/2, R/4, R/8 (levels[0] finest).
struct OccupancyPyramid {
    uint32_t resolution = 0;
    std::array<std::vector<VoxelCoord>, 4> levels;

    static OccupancyPyramid build(const std::vector<VoxelCoord>& coords,
                                  uint32_t resolution);
};

/// Coarse coordinate set {floor(c / factor)}, deduplicated and sorted.
/// factor must be one of 2, 4, 8 and divide the resolution.
std::vector<VoxelCoord> downsample_occupancy(const std::vector<VoxelCoord>& coords,
                                             uint32_t factor);

/// Per predicted voxel: 1 if it belongs to the ground-truth set (keep),
/// else 0 (prune).
std::vector<uint8_t> prune_targets(const std::vector<VoxelCoord>& pred_coords,
                                   const std::vector<VoxelCoord>& gt_coords);

/// Mean binary cross-entropy on logits, differentiable.
nn::Tensor prune_bce(const nn::Tensor& logits, const std::vector<uint8_t>& labels);

/// Keep exactly the masked voxels.
SparseAttributeGrid apply_prune(const SparseAttributeGrid& grid,
                                const std::vector<uint8_t>& keep_mask);

/// Inference threshold: keep sigma(logit) > 0.5, ties keep (logit >= 0).
std::vector<uint8_t> threshold_logits(const std::vector<double>& logits);

} // namespace txg
