#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "txg/mesh.hpp"
#include "txg/png_io.hpp"

namespace txg {

/// Float image with a per-texel validity mask. Row 0 is the bottom row
/// (v = 0), matching the UV convention used throughout.
struct TextureImage {
    uint32_t width = 0, height = 0, channels = 0;
    std::vector<float> values;       // width*height*channels, in [0,1]
    std::vector<uint8_t> valid;      // width*height
    std::vector<float> missing_mass; // optional, width*height

    TextureImage() = default;
    TextureImage(uint32_t w, uint32_t h, uint32_t c)
        : width(w), height(h), channels(c), values(size_t(w) * h * c, 0.0f),
          valid(size_t(w) * h, 0) {}

    size_t texel(uint32_t x, uint32_t y) const { return size_t(y) * width + x; }
    float* at(uint32_t x, uint32_t y) { return values.data() + texel(x, y) * channels; }
    const float* at(uint32_t x, uint32_t y) const {
        return values.data() + texel(x, y) * channels;
    }
};

/// Per-texel 3D surface point plus validity; used both for UV position maps
/// and camera-view position maps. Row 0 is the bottom row.
struct PositionMap {
    uint32_t width = 0, height = 0;
    std::vector<Vec3> positions;  // width*height
    std::vector<uint8_t> valid;   // width*height

    PositionMap() = default;
    PositionMap(uint32_t w, uint32_t h)
        : width(w), height(h), positions(size_t(w) * h), valid(size_t(w) * h, 0) {}

    size_t texel(uint32_t x, uint32_t y) const { return size_t(y) * width + x; }
};

/// TXPOS raw format: "TXPOS", u32 W, u32 H, then W*H records of
/// little-endian f32 (x, y, z, mask), bottom row first.
void save_txpos(const PositionMap& pm, const std::string& path);
PositionMap load_txpos(const std::string& path);

/// 8-bit PNG conversion. PNG rows run top to bottom, so row order is
/// flipped; channel values clamped to [0,1] and quantized. A fourth alpha
/// channel carries the validity mask when with_alpha is set.
Png8 to_png(const TextureImage& img, bool with_alpha = false);
TextureImage from_png(const Png8& png);

void save_texture_png(const TextureImage& img, const std::string& path,
                      bool with_alpha = false);
TextureImage load_texture_png(const std::string& path);

} // namespace txg
