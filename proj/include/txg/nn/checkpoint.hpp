#pragma once

#include <string>

#include "txg/nn/optim.hpp"

namespace txg::nn {

/// TXCKPT1: magic "TXCKPT1\0", u32 blob count, then per blob: u16 name
/// length, name bytes, u8 rank, rank x u32 dims, dims-product x f32 values.
/// Little-endian throughout.
void save_checkpoint(const ParamStore& params, const std::string& path);

/// Loads values into an already-built ParamStore; names and shapes must
/// match exactly.
void load_checkpoint(ParamStore& params, const std::string& path);

} // namespace txg::nn
