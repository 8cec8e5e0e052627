#include "txg/projection.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace txg {

SparseAttributeGrid project_image_to_grid(const TextureImage& img, const PositionMap& vpm,
                                          uint32_t resolution) {
    if (img.width != vpm.width || img.height != vpm.height)
        throw std::invalid_argument("project_image_to_grid: image/posmap size mismatch");
    const uint32_t k = img.channels;
    const int32_t r = int32_t(resolution);

    struct Bucket {
        std::vector<double> sum;
        size_t count = 0;
    };
    std::map<VoxelCoord, Bucket> buckets;
    for (uint32_t y = 0; y < img.height; ++y) {
        for (uint32_t x = 0; x < img.width; ++x) {
            size_t t = vpm.texel(x, y);
            if (!vpm.valid[t] || !img.valid[t]) continue;
            const Vec3& p = vpm.positions[t];
            auto cell = [&](double v) {
                int32_t i = int32_t(std::floor((v + 0.5) * r));
                return std::clamp(i, 0, r - 1);
            };
            VoxelCoord c{cell(p.x), cell(p.y), cell(p.z)};
            Bucket& b = buckets[c];
            if (b.sum.empty()) b.sum.assign(k, 0.0);
            const float* src = img.at(x, y);
            for (uint32_t ch = 0; ch < k; ++ch) b.sum[ch] += src[ch];
            ++b.count;
        }
    }

    std::vector<VoxelCoord> coords;
    std::vector<float> attrs;
    coords.reserve(buckets.size());
    attrs.reserve(buckets.size() * k);
    for (const auto& [c, b] : buckets) {
        coords.push_back(c);
        for (uint32_t ch = 0; ch < k; ++ch) attrs.push_back(float(b.sum[ch] / double(b.count)));
    }
    return SparseAttributeGrid::from_rows(resolution, color_layout(k), std::move(coords),
                                          std::move(attrs));
}

} // namespace txg
