#include "txg/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace txg::nn {

namespace {
constexpr char kMagic[8] = {'T', 'X', 'C', 'K', 'P', 'T', '1', '\0'};
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kMagic, 8);
    uint32_t count = uint32_t(params.items().size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [name, t] : params.items()) {
        uint16_t len = uint16_t(name.size());
        out.write(reinterpret_cast<const char*>(&len), 2);
        out.write(name.data(), len);
        uint8_t rank = uint8_t(t.rank());
        out.write(reinterpret_cast<const char*>(&rank), 1);
        for (int d : t.shape()) {
            uint32_t u = uint32_t(d);
            out.write(reinterpret_cast<const char*>(&u), 4);
        }
        for (double v : t.values()) {
            float f = float(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void load_checkpoint(ParamStore& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("TXCKPT1: bad magic in " + path);
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in || count != params.items().size())
        throw std::runtime_error("TXCKPT1: parameter count mismatch");
    for (const auto& [name, t] : params.items()) {
        uint16_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 2);
        std::string got(len, '\0');
        in.read(got.data(), len);
        if (!in || got != name)
            throw std::runtime_error("TXCKPT1: expected parameter '" + name + "', found '" +
                                     got + "'");
        uint8_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 1);
        if (!in || rank != t.rank())
            throw std::runtime_error("TXCKPT1: rank mismatch for " + name);
        for (int d : t.shape()) {
            uint32_t u = 0;
            in.read(reinterpret_cast<char*>(&u), 4);
            if (!in || u != uint32_t(d))
                throw std::runtime_error("TXCKPT1: shape mismatch for " + name);
        }
        Tensor mut = t;
        for (size_t i = 0; i < t.numel(); ++i) {
            float f = 0;
            in.read(reinterpret_cast<char*>(&f), 4);
            if (!in) throw std::runtime_error("TXCKPT1: truncated values for " + name);
            mut.values()[i] = double(f);
        }
    }
}

} // namespace txg::nn
