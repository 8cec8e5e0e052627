#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace txg {

/// 8-bit image buffer, row 0 first in memory. channels in {1, 3, 4}.
struct Png8 {
    uint32_t width = 0, height = 0, channels = 0;
    std::vector<uint8_t> pixels; // width * height * channels

    uint8_t at(uint32_t x, uint32_t y, uint32_t c) const {
        return pixels[(size_t(y) * width + x) * channels + c];
    }
};

/// Minimal PNG support: 8-bit gray / RGB / RGBA, non-interlaced, zlib-backed.
void save_png(const Png8& img, const std::string& path);
Png8 load_png(const std::string& path);

} // namespace txg
