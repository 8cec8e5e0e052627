#include "txg/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace txg {

namespace {

uint32_t crc_of(const uint8_t* data, size_t n) {
    return uint32_t(crc32(0L, data, uInt(n)));
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void write_chunk(std::vector<uint8_t>& out, const char type[4],
                 const std::vector<uint8_t>& body) {
    put_u32be(out, uint32_t(body.size()));
    std::vector<uint8_t> typed(type, type + 4);
    typed.insert(typed.end(), body.begin(), body.end());
    out.insert(out.end(), typed.begin(), typed.end());
    put_u32be(out, crc_of(typed.data(), typed.size()));
}

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& data) {
    uLongf bound = compressBound(uLong(data.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, data.data(), uLong(data.size()), 6) != Z_OK)
        throw std::runtime_error("PNG: zlib compression failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(const std::vector<uint8_t>& data, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf len = uLongf(expected);
    int rc = uncompress(out.data(), &len, data.data(), uLong(data.size()));
    if (rc != Z_OK || len != expected)
        throw std::runtime_error("PNG: zlib decompression failed");
    return out;
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

const uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

} // namespace

void save_png(const Png8& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3 && img.channels != 4)
        throw std::invalid_argument("PNG: unsupported channel count");
    if (img.pixels.size() != size_t(img.width) * img.height * img.channels)
        throw std::invalid_argument("PNG: pixel buffer size mismatch");

    std::vector<uint8_t> file(kSignature, kSignature + 8);

    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, img.width);
    put_u32be(ihdr, img.height);
    ihdr.push_back(8); // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : (img.channels == 3 ? 2 : 6));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(file, "IHDR", ihdr);

    // filter type 0 per scanline
    const size_t stride = size_t(img.width) * img.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (uint32_t y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const uint8_t* rowp = img.pixels.data() + y * stride;
        raw.insert(raw.end(), rowp, rowp + stride);
    }
    write_chunk(file, "IDAT", zlib_compress(raw));
    write_chunk(file, "IEND", {});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(file.data()), std::streamsize(file.size()));
}

Png8 load_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> file((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    if (file.size() < 8 || std::memcmp(file.data(), kSignature, 8) != 0)
        throw std::runtime_error("PNG: bad signature in " + path);

    Png8 img;
    std::vector<uint8_t> idat;
    bool have_ihdr = false;
    size_t pos = 8;
    while (pos + 8 <= file.size()) {
        uint32_t len = get_u32be(&file[pos]);
        if (pos + 12 + len > file.size()) throw std::runtime_error("PNG: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
        const uint8_t* body = &file[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("PNG: bad IHDR length");
            img.width = get_u32be(body);
            img.height = get_u32be(body + 4);
            uint8_t depth = body[8], color = body[9], interlace = body[12];
            if (depth != 8) throw std::runtime_error("PNG: only 8-bit depth supported");
            if (interlace != 0) throw std::runtime_error("PNG: interlacing not supported");
            if (color == 0) img.channels = 1;
            else if (color == 2) img.channels = 3;
            else if (color == 6) img.channels = 4;
            else throw std::runtime_error("PNG: unsupported color type");
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!have_ihdr || img.width == 0 || img.height == 0)
        throw std::runtime_error("PNG: missing or empty IHDR");

    const size_t bpp = img.channels;
    const size_t stride = size_t(img.width) * bpp;
    std::vector<uint8_t> raw = zlib_decompress(idat, (stride + 1) * img.height);

    img.pixels.assign(stride * img.height, 0);
    std::vector<uint8_t> prev(stride, 0);
    for (uint32_t y = 0; y < img.height; ++y) {
        uint8_t filter = raw[y * (stride + 1)];
        const uint8_t* src = &raw[y * (stride + 1) + 1];
        uint8_t* dst = &img.pixels[y * stride];
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= bpp ? dst[i - bpp] : 0;
            int b = prev[i];
            int c = i >= bpp ? prev[i - bpp] : 0;
            int x = src[i];
            switch (filter) {
                case 0: dst[i] = uint8_t(x); break;
                case 1: dst[i] = uint8_t(x + a); break;
                case 2: dst[i] = uint8_t(x + b); break;
                case 3: dst[i] = uint8_t(x + (a + b) / 2); break;
                case 4: dst[i] = uint8_t(x + paeth(a, b, c)); break;
                default: throw std::runtime_error("PNG: unknown filter type");
            }
        }
        std::copy(dst, dst + stride, prev.begin());
    }
    return img;
}

} // namespace txg
