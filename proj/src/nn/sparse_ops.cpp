#include "txg/nn/sparse_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace txg::nn {

void check_token_set(const SparseTokenSet& tokens) {
    if (!tokens.features.defined() || tokens.features.rank() != 2 ||
        tokens.features.dim(0) != int(tokens.coords.size()))
        throw std::invalid_argument("token set: feature rows do not match coordinates");
    for (size_t i = 1; i < tokens.coords.size(); ++i)
        if (!(tokens.coords[i - 1] < tokens.coords[i]))
            throw std::invalid_argument("token set: coordinates unsorted or duplicated");
}

std::map<VoxelCoord, int> coord_index(const std::vector<VoxelCoord>& coords) {
    std::map<VoxelCoord, int> index;
    for (size_t i = 0; i < coords.size(); ++i) index[coords[i]] = int(i);
    return index;
}

AttentionParams AttentionParams::init(int d_model, int d_context, int heads, Rng& rng) {
    if (d_model % heads != 0)
        throw std::invalid_argument("attention: d_model not divisible by heads");
    AttentionParams p;
    p.heads = heads;
    double sq = 1.0 / std::sqrt(double(d_model));
    double sc = 1.0 / std::sqrt(double(d_context));
    p.wq = Tensor::uniform({d_model, d_model}, rng, sq);
    p.bq = Tensor::zeros({d_model}, true);
    p.wk = Tensor::uniform({d_context, d_model}, rng, sc);
    p.bk = Tensor::zeros({d_model}, true);
    p.wv = Tensor::uniform({d_context, d_model}, rng, sc);
    p.bv = Tensor::zeros({d_model}, true);
    p.wo = Tensor::uniform({d_model, d_model}, rng, sq);
    p.bo = Tensor::zeros({d_model}, true);
    return p;
}

Tensor multihead_attention(const Tensor& queries, const Tensor& context,
                           const AttentionParams& p) {
    const int d_model = p.wq.dim(1);
    if (queries.dim(1) != p.wq.dim(0))
        throw std::invalid_argument("attention: query width mismatch");
    if (context.dim(1) != p.wk.dim(0))
        throw std::invalid_argument("attention: context width mismatch");
    const int dh = d_model / p.heads;

    Tensor q = linear(queries, p.wq, p.bq);
    Tensor k = linear(context, p.wk, p.bk);
    Tensor v = linear(context, p.wv, p.bv);

    std::vector<Tensor> head_outs;
    head_outs.reserve(size_t(p.heads));
    for (int h = 0; h < p.heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        Tensor vh = slice_cols(v, h * dh, dh);
        Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(double(dh)));
        head_outs.push_back(matmul(softmax(scores), vh));
    }
    return linear(concat_cols(head_outs), p.wo, p.bo);
}

namespace {

VoxelCoord downsample2(const VoxelCoord& c) {
    return {c.ix >> 1, c.iy >> 1, c.iz >> 1};
}

std::vector<VoxelCoord> stride2_coords(const std::vector<VoxelCoord>& coords) {
    std::vector<VoxelCoord> out;
    out.reserve(coords.size());
    for (const auto& c : coords) out.push_back(downsample2(c));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

SparseTokenSet sparse_conv(const SparseTokenSet& tokens, const Tensor& weight,
                           const Tensor& bias, int stride) {
    check_token_set(tokens);
    if (stride != 1 && stride != 2)
        throw std::invalid_argument("sparse_conv: stride must be 1 or 2");
    const int din = tokens.width();
    if (weight.rank() != 2 || weight.dim(0) != 27 * din)
        throw std::invalid_argument("sparse_conv: weight must be [27*d_in, d_out]");

    std::vector<VoxelCoord> out_coords =
        stride == 1 ? tokens.coords : stride2_coords(tokens.coords);
    auto index = coord_index(tokens.coords);

    std::vector<std::vector<int>> table(out_coords.size(), std::vector<int>(27, -1));
    for (size_t i = 0; i < out_coords.size(); ++i) {
        VoxelCoord base = out_coords[i];
        if (stride == 2) base = {base.ix * 2, base.iy * 2, base.iz * 2};
        int t = 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz, ++t) {
                    auto it = index.find({base.ix + dx, base.iy + dy, base.iz + dz});
                    if (it != index.end()) table[i][size_t(t)] = it->second;
                }
    }
    Tensor gathered = stencil_gather(tokens.features, table);
    return {std::move(out_coords), linear(gathered, weight, bias)};
}

SparseTokenSet upsample_conv(const SparseTokenSet& tokens,
                             const std::vector<VoxelCoord>& fine_coords,
                             const Tensor& weight, const Tensor& bias,
                             const Tensor& octant_embed) {
    check_token_set(tokens);
    const int din = tokens.width();
    if (weight.rank() != 2 || weight.dim(0) != 27 * din)
        throw std::invalid_argument("upsample_conv: weight must be [27*d_in, d_out]");
    if (octant_embed.rank() != 2 || octant_embed.dim(0) != 8 ||
        octant_embed.dim(1) != weight.dim(1))
        throw std::invalid_argument("upsample_conv: octant embed must be [8, d_out]");

    auto index = coord_index(tokens.coords);
    std::vector<std::vector<int>> table(fine_coords.size(), std::vector<int>(27, -1));
    std::vector<int> octants(fine_coords.size());
    for (size_t i = 0; i < fine_coords.size(); ++i) {
        const VoxelCoord& c = fine_coords[i];
        VoxelCoord parent = downsample2(c);
        int t = 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz, ++t) {
                    auto it = index.find({parent.ix + dx, parent.iy + dy, parent.iz + dz});
                    if (it != index.end()) table[i][size_t(t)] = it->second;
                }
        octants[i] = 4 * (c.ix & 1) + 2 * (c.iy & 1) + (c.iz & 1);
    }
    Tensor gathered = stencil_gather(tokens.features, table);
    Tensor out = linear(gathered, weight, bias);
    out = add(out, gather_rows(octant_embed, octants));
    return {fine_coords, out};
}

SparseTokenSet windowed_sparse_attention(const SparseTokenSet& tokens, int window,
                                         const AttentionParams& p) {
    check_token_set(tokens);
    if (window < 1) throw std::invalid_argument("windowed attention: window must be >= 1");
    const int n = int(tokens.size());

    // group token rows by block
    std::map<VoxelCoord, std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) {
        const VoxelCoord& c = tokens.coords[size_t(i)];
        blocks[{c.ix / window, c.iy / window, c.iz / window}].push_back(i);
    }

    std::vector<Tensor> block_outs;
    std::vector<int> perm;
    perm.reserve(size_t(n));
    for (const auto& [block, rows] : blocks) {
        Tensor sub = gather_rows(tokens.features, rows);
        block_outs.push_back(multihead_attention(sub, sub, p));
        perm.insert(perm.end(), rows.begin(), rows.end());
    }
    Tensor stacked = concat_rows(block_outs);
    std::vector<int> inverse(size_t(n), 0);
    for (int i = 0; i < n; ++i) inverse[size_t(perm[size_t(i)])] = i;
    return {tokens.coords, gather_rows(stacked, inverse)};
}

Tensor position_embed(const std::vector<VoxelCoord>& coords, int d) {
    if (d % 6 != 0) throw std::invalid_argument("position_embed: d must divide by 6");
    const int per_axis = d / 3;
    const int pairs = per_axis / 2;
    Tensor out = Tensor::zeros({int(coords.size()), d});
    for (size_t i = 0; i < coords.size(); ++i) {
        double* row = out.values().data() + i * size_t(d);
        for (int axis = 0; axis < 3; ++axis) {
            const VoxelCoord& c = coords[i];
            double x = axis == 0 ? c.ix : (axis == 1 ? c.iy : c.iz);
            for (int m = 0; m < pairs; ++m) {
                double omega = std::pow(10000.0, -double(m) / double(pairs));
                row[axis * per_axis + 2 * m] = std::sin(x * omega);
                row[axis * per_axis + 2 * m + 1] = std::cos(x * omega);
            }
        }
    }
    return out;
}

Tensor time_embed(double t, int d) {
    if (d % 2 != 0) throw std::invalid_argument("time_embed: d must be even");
    const int pairs = d / 2;
    Tensor out = Tensor::zeros({1, d});
    double x = t * 1000.0;
    for (int m = 0; m < pairs; ++m) {
        double omega = std::pow(10000.0, -double(m) / double(pairs));
        out.values()[size_t(2 * m)] = std::sin(x * omega);
        out.values()[size_t(2 * m + 1)] = std::cos(x * omega);
    }
    return out;
}

} // namespace txg::nn
