#include "txg/pruning.hpp"

#include <algorithm>
#include <stdexcept>

namespace txg {

OccupancyPyramid OccupancyPyramid::build(const std::vector<VoxelCoord>& coords,
                                         uint32_t resolution) {
    OccupancyPyramid pyr;
    pyr.resolution = resolution;
    pyr.levels[0] = coords;
    std::sort(pyr.levels[0].begin(), pyr.levels[0].end());
    pyr.levels[0].erase(std::unique(pyr.levels[0].begin(), pyr.levels[0].end()),
                        pyr.levels[0].end());
    for (int l = 1; l < 4; ++l) pyr.levels[size_t(l)] = downsample_occupancy(pyr.levels[size_t(l - 1)], 2);
    return pyr;
}

std::vector<VoxelCoord> downsample_occupancy(const std::vector<VoxelCoord>& coords,
                                             uint32_t factor) {
    if (factor != 2 && factor != 4 && factor != 8)
        throw std::invalid_argument("downsample_occupancy: factor must be 2, 4 or 8");
    std::vector<VoxelCoord> out;
    out.reserve(coords.size());
    int32_t f = int32_t(factor);
    for (const auto& c : coords) out.push_back({c.ix / f, c.iy / f, c.iz / f});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<uint8_t> prune_targets(const std::vector<VoxelCoord>& pred_coords,
                                   const std::vector<VoxelCoord>& gt_coords) {
    std::vector<VoxelCoord> gt = gt_coords;
    std::sort(gt.begin(), gt.end());
    std::vector<uint8_t> labels(pred_coords.size(), 0);
    for (size_t i = 0; i < pred_coords.size(); ++i)
        labels[i] = std::binary_search(gt.begin(), gt.end(), pred_coords[i]) ? 1 : 0;
    return labels;
}

nn::Tensor prune_bce(const nn::Tensor& logits, const std::vector<uint8_t>& labels) {
    if (logits.numel() != labels.size())
        throw std::invalid_argument("prune_bce: logits/labels length mismatch");
    std::vector<double> y(labels.begin(), labels.end());
    nn::Tensor targets = nn::Tensor::from_values(logits.shape(), std::move(y));
    return nn::bce_with_logits(logits, targets);
}

SparseAttributeGrid apply_prune(const SparseAttributeGrid& grid,
                                const std::vector<uint8_t>& keep_mask) {
    if (keep_mask.size() != grid.size())
        throw std::invalid_argument("apply_prune: mask length mismatch");
    std::vector<VoxelCoord> coords;
    std::vector<float> attrs;
    const uint32_t k = grid.channels();
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!keep_mask[i]) continue;
        coords.push_back(grid.coord(i));
        attrs.insert(attrs.end(), grid.row(i), grid.row(i) + k);
    }
    return SparseAttributeGrid::from_rows(grid.resolution(), grid.layout(), std::move(coords),
                                          std::move(attrs));
}

std::vector<uint8_t> threshold_logits(const std::vector<double>& logits) {
    std::vector<uint8_t> keep(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) keep[i] = logits[i] >= 0.0 ? 1 : 0;
    return keep;
}

} // namespace txg
