#pragma once

#include <map>

#include "txg/grid.hpp"
#include "txg/nn/tensor.hpp"

namespace txg::nn {

/// Sorted voxel coordinates with a row-aligned [N, d] feature tensor.
struct SparseTokenSet {
    std::vector<VoxelCoord> coords; // lexicographic, z fastest
    Tensor features;

    size_t size() const { return coords.size(); }
    int width() const { return features.dim(1); }
};

/// Validates sortedness and row alignment.
void check_token_set(const SparseTokenSet& tokens);

/// Row lookup table over a sorted coordinate list.
std::map<VoxelCoord, int> coord_index(const std::vector<VoxelCoord>& coords);

/// Multi-head attention parameters (shared by self- and cross-attention).
struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    int heads = 1;

    static AttentionParams init(int d_model, int d_context, int heads, Rng& rng);
    std::vector<Tensor> tensors() const { return {wq, bq, wk, bk, wv, bv, wo, bo}; }
};

/// Standard multi-head attention: queries [Nq, d_model], context [Nk, d_ctx].
Tensor multihead_attention(const Tensor& queries, const Tensor& context,
                           const AttentionParams& p);

/// Submanifold 3x3x3 sparse convolution. weight is [27*d_in, d_out] with tap
/// order (dx, dy, dz) lexicographic over {-1,0,1}; absent neighbors
/// contribute zero. stride 2 outputs on the factor-2 downsampled coordinate
/// set, gathering from input coords around 2*c_out.
SparseTokenSet sparse_conv(const SparseTokenSet& tokens, const Tensor& weight,
                           const Tensor& bias, int stride);

/// Transposed-convolution upsample to the given fine coordinate set: each
/// fine voxel gathers the 3x3x3 neighborhood of its parent coarse voxel and
/// adds a per-child-octant embedding ([8, d_out], row = 4*(x&1)+2*(y&1)+(z&1)).
SparseTokenSet upsample_conv(const SparseTokenSet& tokens,
                             const std::vector<VoxelCoord>& fine_coords,
                             const Tensor& weight, const Tensor& bias,
                             const Tensor& octant_embed);

/// Block-local self-attention: latent space partitioned into axis-aligned
/// cubes of side `window`; full attention within each block, coordinates
/// unchanged. Single-token blocks reduce to the value path of the token.
SparseTokenSet windowed_sparse_attention(const SparseTokenSet& tokens, int window,
                                         const AttentionParams& p);

/// Sinusoidal embedding of voxel coordinates: d/3 dims per axis as sin/cos
/// pairs on a geometric frequency ladder (base 1e4). d must divide by 6.
Tensor position_embed(const std::vector<VoxelCoord>& coords, int d);

/// Sinusoidal embedding of a scalar in [0,1] (frequency ladder base 1e4,
/// input scaled by 1000). d must be even. Returns [1, d].
Tensor time_embed(double t, int d);

} // namespace txg::nn
