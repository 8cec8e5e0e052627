#include "txg/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace txg {

void save_txpos(const PositionMap& pm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write("TXPOS", 5);
    uint32_t w = pm.width, h = pm.height;
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    for (size_t i = 0; i < pm.positions.size(); ++i) {
        float rec[4] = {float(pm.positions[i].x), float(pm.positions[i].y),
                        float(pm.positions[i].z), pm.valid[i] ? 1.0f : 0.0f};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

PositionMap load_txpos(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "TXPOS", 5) != 0)
        throw std::runtime_error("TXPOS: bad magic in " + path);
    uint32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in || w == 0 || h == 0) throw std::runtime_error("TXPOS: bad header");
    PositionMap pm(w, h);
    for (size_t i = 0; i < pm.positions.size(); ++i) {
        float rec[4];
        in.read(reinterpret_cast<char*>(rec), sizeof(rec));
        if (!in) throw std::runtime_error("TXPOS: truncated record");
        pm.positions[i] = Vec3{rec[0], rec[1], rec[2]};
        pm.valid[i] = rec[3] != 0.0f ? 1 : 0;
    }
    return pm;
}

Png8 to_png(const TextureImage& img, bool with_alpha) {
    if (img.channels < 1 || img.channels > 3)
        throw std::invalid_argument("to_png: expected 1..3 channels");
    Png8 png;
    png.width = img.width;
    png.height = img.height;
    png.channels = with_alpha ? 4 : (img.channels == 1 ? 1 : 3);
    png.pixels.assign(size_t(png.width) * png.height * png.channels, 0);
    for (uint32_t y = 0; y < img.height; ++y) {
        uint32_t py = img.height - 1 - y; // PNG top row first
        for (uint32_t x = 0; x < img.width; ++x) {
            const float* src = img.at(x, y);
            uint8_t* dst = &png.pixels[(size_t(py) * png.width + x) * png.channels];
            uint32_t out_color = with_alpha ? 3 : png.channels;
            for (uint32_t c = 0; c < out_color; ++c) {
                float v = src[std::min(c, img.channels - 1)];
                v = std::clamp(v, 0.0f, 1.0f);
                dst[c] = uint8_t(std::lround(v * 255.0f));
            }
            if (with_alpha) dst[3] = img.valid[img.texel(x, y)] ? 255 : 0;
        }
    }
    return png;
}

TextureImage from_png(const Png8& png) {
    uint32_t channels = png.channels == 4 ? 3 : png.channels;
    TextureImage img(png.width, png.height, channels);
    for (uint32_t y = 0; y < png.height; ++y) {
        uint32_t iy = png.height - 1 - y;
        for (uint32_t x = 0; x < png.width; ++x) {
            float* dst = img.at(x, iy);
            for (uint32_t c = 0; c < channels; ++c)
                dst[c] = float(png.at(x, y, c)) / 255.0f;
            img.valid[img.texel(x, iy)] =
                png.channels == 4 ? (png.at(x, y, 3) != 0 ? 1 : 0) : 1;
        }
    }
    return img;
}

void save_texture_png(const TextureImage& img, const std::string& path, bool with_alpha) {
    save_png(to_png(img, with_alpha), path);
}

TextureImage load_texture_png(const std::string& path) { return from_png(load_png(path)); }

} // namespace txg
