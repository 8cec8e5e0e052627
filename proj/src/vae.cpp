#include "txg/vae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace txg {

using nn::Tensor;


VaeConfig VaeConfig::micro() {
    VaeConfig cfg;
    cfg.resolution = 8;
    cfg.channels = 3;
    cfg.width1 = 8;
    cfg.width2 = 8;
    cfg.width3 = 8;
    cfg.d_lat = 4;
    cfg.transformer_blocks = 1;
    cfg.heads = 2;
    cfg.window = 4;
    cfg.ffn_mult = 2;
    return cfg;
}

TransformerBlock TransformerBlock::init(int d, int heads, int ffn_mult, Rng& rng) {
    TransformerBlock b;
    b.attn = nn::AttentionParams::init(d, d, heads, rng);
    b.ln1_g = Tensor::full({d}, 1.0, true);
    b.ln1_b = Tensor::zeros({d}, true);
    b.ln2_g = Tensor::full({d}, 1.0, true);
    b.ln2_b = Tensor::zeros({d}, true);
    int dh = d * ffn_mult;
    b.ffn_w1 = Tensor::uniform({d, dh}, rng, 1.0 / std::sqrt(double(d)));
    b.ffn_b1 = Tensor::zeros({dh}, true);
    b.ffn_w2 = Tensor::uniform({dh, d}, rng, 1.0 / std::sqrt(double(dh)));
    b.ffn_b2 = Tensor::zeros({d}, true);
    return b;
}

void TransformerBlock::register_params(nn::ParamStore& store, const std::string& prefix) {
    store.add(prefix + ".attn.wq", attn.wq);
    store.add(prefix + ".attn.bq", attn.bq);
    store.add(prefix + ".attn.wk", attn.wk);
    store.add(prefix + ".attn.bk", attn.bk);
    store.add(prefix + ".attn.wv", attn.wv);
    store.add(prefix + ".attn.bv", attn.bv);
    store.add(prefix + ".attn.wo", attn.wo);
    store.add(prefix + ".attn.bo", attn.bo);
    store.add(prefix + ".ln1.g", ln1_g);
    store.add(prefix + ".ln1.b", ln1_b);
    store.add(prefix + ".ln2.g", ln2_g);
    store.add(prefix + ".ln2.b", ln2_b);
    store.add(prefix + ".ffn.w1", ffn_w1);
    store.add(prefix + ".ffn.b1", ffn_b1);
    store.add(prefix + ".ffn.w2", ffn_w2);
    store.add(prefix + ".ffn.b2", ffn_b2);
}

nn::SparseTokenSet TransformerBlock::apply(const nn::SparseTokenSet& x, int window) const {
    nn::SparseTokenSet normed{x.coords, nn::layernorm(x.features, ln1_g, ln1_b)};
    nn::SparseTokenSet attended = nn::windowed_sparse_attention(normed, window, attn);
    Tensor h = nn::add(x.features, attended.features);
    Tensor n2 = nn::layernorm(h, ln2_g, ln2_b);
    Tensor ff = nn::linear(nn::gelu(nn::linear(n2, ffn_w1, ffn_b1)), ffn_w2, ffn_b2);
    return {x.coords, nn::add(h, ff)};
}

AttributeVae::AttributeVae(VaeConfig cfg, uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    const int k = int(cfg.channels);
    auto conv_init = [&](int din, int dout) {
        return Tensor::uniform({27 * din, dout}, rng, 1.0 / std::sqrt(double(27 * din)));
    };
    auto lin_init = [&](int din, int dout) {
        return Tensor::uniform({din, dout}, rng, 1.0 / std::sqrt(double(din)));
    };

    enc_w1_ = params_.add("enc.conv1.w", conv_init(k, cfg.width1));
    enc_b1_ = params_.add("enc.conv1.b", Tensor::zeros({cfg.width1}, true));
    enc_w2_ = params_.add("enc.conv2.w", conv_init(cfg.width1, cfg.width2));
    enc_b2_ = params_.add("enc.conv2.b", Tensor::zeros({cfg.width2}, true));
    enc_w3_ = params_.add("enc.conv3.w", conv_init(cfg.width2, cfg.width3));
    enc_b3_ = params_.add("enc.conv3.b", Tensor::zeros({cfg.width3}, true));
    for (int b = 0; b < cfg.transformer_blocks; ++b) {
        enc_blocks_.push_back(
            TransformerBlock::init(cfg.width3, cfg.heads, cfg.ffn_mult, rng));
        enc_blocks_.back().register_params(params_, "enc.block" + std::to_string(b));
    }
    lat_w_ = params_.add("enc.latent.w", lin_init(cfg.width3, 2 * cfg.d_lat));
    lat_b_ = params_.add("enc.latent.b", Tensor::zeros({2 * cfg.d_lat}, true));

    dec_in_w_ = params_.add("dec.in.w", lin_init(cfg.d_lat, cfg.width3));
    dec_in_b_ = params_.add("dec.in.b", Tensor::zeros({cfg.width3}, true));
    for (int b = 0; b < cfg.transformer_blocks; ++b) {
        dec_blocks_.push_back(
            TransformerBlock::init(cfg.width3, cfg.heads, cfg.ffn_mult, rng));
        dec_blocks_.back().register_params(params_, "dec.block" + std::to_string(b));
    }
    const int stage_in[3] = {cfg.width3, cfg.width2, cfg.width1};
    const int stage_out[3] = {cfg.width2, cfg.width1, cfg.width1};
    for (int s = 0; s < 3; ++s) {
        std::string p = "dec.up" + std::to_string(s);
        up_w_[s] = params_.add(p + ".w", conv_init(stage_in[s], stage_out[s]));
        up_b_[s] = params_.add(p + ".b", Tensor::zeros({stage_out[s]}, true));
        up_oct_[s] = params_.add(p + ".oct",
                                 Tensor::uniform({8, stage_out[s]}, rng,
                                                 1.0 / std::sqrt(double(stage_out[s]))));
        prune_w1_[s] = params_.add(
            p + ".prune.w1", lin_init(stage_out[s] + 2 * cfg.prune_pos_dim, cfg.prune_hidden));
        prune_b1_[s] = params_.add(p + ".prune.b1", Tensor::zeros({cfg.prune_hidden}, true));
        prune_w2_[s] = params_.add(p + ".prune.w2", lin_init(cfg.prune_hidden, 1));
        prune_b2_[s] = params_.add(p + ".prune.b2", Tensor::zeros({1}, true));
    }
    out_w_ = params_.add("dec.out.w", lin_init(cfg.width1, k));
    out_b_ = params_.add("dec.out.b", Tensor::zeros({k}, true));
}

nn::SparseTokenSet AttributeVae::grid_tokens(const SparseAttributeGrid& grid) {
    std::vector<double> vals(grid.attributes().begin(), grid.attributes().end());
    Tensor f = Tensor::from_values({int(grid.size()), int(grid.channels())}, std::move(vals));
    return {grid.coords(), f};
}

SparseAttributeGrid AttributeVae::tokens_to_grid(const nn::SparseTokenSet& tokens,
                                                 uint32_t resolution, ChannelLayout layout) {
    std::vector<float> attrs(tokens.features.values().begin(),
                             tokens.features.values().end());
    return SparseAttributeGrid::from_rows(resolution, layout, tokens.coords,
                                          std::move(attrs));
}

nn::SparseTokenSet AttributeVae::run_blocks(const nn::SparseTokenSet& x,
                                            const std::vector<TransformerBlock>& blocks) const {
    nn::SparseTokenSet cur = x;
    for (const auto& b : blocks) cur = b.apply(cur, cfg_.window);
    return cur;
}

LatentGrid AttributeVae::encode(const nn::SparseTokenSet& input) const {
    if (input.coords.empty()) throw std::invalid_argument("encode: empty grid");
    nn::SparseTokenSet h = nn::sparse_conv(input, enc_w1_, enc_b1_, 2);
    h.features = nn::gelu(h.features);
    h = nn::sparse_conv(h, enc_w2_, enc_b2_, 2);
    h.features = nn::gelu(h.features);
    h = nn::sparse_conv(h, enc_w3_, enc_b3_, 2);
    h.features = nn::gelu(h.features);
    h = run_blocks(h, enc_blocks_);
    Tensor stats = nn::linear(h.features, lat_w_, lat_b_);
    LatentGrid lat;
    lat.coords = h.coords;
    lat.mu = nn::slice_cols(stats, 0, cfg_.d_lat);
    lat.logvar = nn::clamp_t(nn::slice_cols(stats, cfg_.d_lat, cfg_.d_lat), -30.0, 20.0);
    return lat;
}

LatentGrid AttributeVae::encode_grid(const SparseAttributeGrid& grid) const {
    return encode(grid_tokens(grid));
}

Tensor AttributeVae::reparameterize(const LatentGrid& lat, Rng& rng) const {
    Tensor eps = Tensor::zeros(lat.mu.shape());
    for (double& v : eps.values()) v = rng.normal();
    return nn::add(lat.mu, nn::mul(nn::exp_t(nn::scale(lat.logvar, 0.5)), eps));
}

namespace {

// fixed sinusoidal position features, zero-padded up to width d
Tensor pos_feats(const std::vector<VoxelCoord>& coords, int d) {
    const int de = (d / 6) * 6;
    if (de == 0) return Tensor::zeros({int(coords.size()), d});
    Tensor e = nn::position_embed(coords, de);
    if (de == d) return e;
    return nn::concat_cols({e, Tensor::zeros({int(coords.size()), d - de})});
}

std::vector<VoxelCoord> children_of(const std::vector<VoxelCoord>& coarse) {
    std::vector<VoxelCoord> fine;
    fine.reserve(coarse.size() * 8);
    for (const auto& c : coarse)
        for (int dx = 0; dx < 2; ++dx)
            for (int dy = 0; dy < 2; ++dy)
                for (int dz = 0; dz < 2; ++dz)
                    fine.push_back({2 * c.ix + dx, 2 * c.iy + dy, 2 * c.iz + dz});
    std::sort(fine.begin(), fine.end());
    return fine;
}

} // namespace

DecodeResult AttributeVae::decode(const std::vector<VoxelCoord>& latent_coords,
                                  const Tensor& z, const OccupancyPyramid& target,
                                  bool teacher_force) const {
    if (int(latent_coords.size()) != z.dim(0))
        throw std::invalid_argument("decode: latent coords/feature mismatch");
    nn::SparseTokenSet h{latent_coords, nn::linear(z, dec_in_w_, dec_in_b_)};
    // decoded tokens see where they live; without this, occupancy and
    // attributes must be inferred from latent content alone
    h.features = nn::add(h.features, pos_feats(latent_coords, h.features.dim(1)));
    h = run_blocks(h, dec_blocks_);

    DecodeResult res;
    for (int s = 0; s < 3; ++s) {
        const auto& gt_level = target.levels[size_t(2 - s)];
        std::vector<VoxelCoord> candidates = children_of(h.coords);
        nn::SparseTokenSet up =
            nn::upsample_conv(h, candidates, up_w_[s], up_b_[s], up_oct_[s]);
        up.features = nn::add(up.features, pos_feats(candidates, up.features.dim(1)));
        up.features = nn::gelu(up.features);
        // the head sees a dedicated multi-frequency position encoding: the
        // trunk widths can be too narrow for an unambiguous one, and
        // keep/drop is primarily a function of where a candidate sits
        std::vector<VoxelCoord> scaled(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i)
            scaled[i] = {4 * candidates[i].ix, 4 * candidates[i].iy, 4 * candidates[i].iz};
        // two scales: the base ladder tops out at one radian per cell, too
        // coarse to separate neighboring candidates across the boundary
        Tensor prune_in =
            nn::concat_cols({up.features, nn::position_embed(candidates, cfg_.prune_pos_dim),
                             nn::position_embed(scaled, cfg_.prune_pos_dim)});
        // fixed output gain: confident keep/drop decisions need large logits,
        // which a unit-gain head cannot reach quickly at small learning rates
        Tensor logits =
            nn::scale(nn::linear(nn::gelu(nn::linear(prune_in, prune_w1_[s], prune_b1_[s])),
                                 prune_w2_[s], prune_b2_[s]),
                      cfg_.prune_logit_gain);

        std::vector<uint8_t> keep;
        if (teacher_force) {
            keep = prune_targets(candidates, gt_level);
        } else {
            std::vector<double> lv(logits.values());
            keep = threshold_logits(lv);
        }
        std::vector<int> kept_rows;
        std::vector<VoxelCoord> kept_coords;
        for (size_t i = 0; i < keep.size(); ++i) {
            if (keep[i]) {
                kept_rows.push_back(int(i));
                kept_coords.push_back(candidates[i]);
            }
        }
        if (kept_rows.empty())
            throw std::runtime_error("decode: pruning removed every voxel at stage " +
                                     std::to_string(s));
        res.prune_logits.push_back(logits);
        res.candidates.push_back(std::move(candidates));
        res.keep_masks.push_back(std::move(keep));
        h = {std::move(kept_coords), nn::gather_rows(up.features, kept_rows)};
    }

    Tensor raw = nn::linear(h.features, out_w_, out_b_);
    const int k = int(cfg_.channels);
    const int kc = std::min(int(cfg_.color_channels), k);
    if (kc >= k) {
        raw = nn::sigmoid(raw);
    } else if (kc > 0) {
        raw = nn::concat_cols({nn::sigmoid(nn::slice_cols(raw, 0, kc)),
                               nn::slice_cols(raw, kc, k - kc)});
    }
    res.output = {h.coords, raw};
    return res;
}

SparseAttributeGrid AttributeVae::reconstruct(const SparseAttributeGrid& grid,
                                              const OccupancyPyramid& target,
                                              bool teacher_force) const {
    LatentGrid lat = encode_grid(grid);
    DecodeResult dec = decode(lat.coords, lat.mu, target, teacher_force);
    return tokens_to_grid(dec.output, grid.resolution(), grid.layout());
}

Tensor kl_loss(const LatentGrid& lat) {
    Tensor term = nn::add(nn::add(nn::square(lat.mu), nn::exp_t(lat.logvar)),
                          nn::add_scalar(nn::neg(lat.logvar), -1.0));
    return nn::scale(nn::mean(term), 0.5);
}

// ---------------------------------------------------------------------------

VaeTrainSample make_train_sample(const TriangleMesh& mesh, const SparseAttributeGrid& grid,
                                 uint32_t view_size, uint32_t num_views) {
    VaeTrainSample sample{grid, OccupancyPyramid::build(grid.coords(), grid.resolution()), {}};
    sample.supervision.channels = grid.channels();
    auto views = default_view_set(view_size, view_size);
    if (num_views < views.size()) views.resize(num_views);
    const uint32_t k = grid.channels();
    for (const auto& cam : views) {
        PositionMap vpm = render_position_map(mesh, cam);
        std::vector<std::vector<std::pair<int, double>>> taps;
        std::vector<double> gt;
        for (uint32_t y = 0; y < vpm.height; ++y) {
            for (uint32_t x = 0; x < vpm.width; ++x) {
                size_t t = vpm.texel(x, y);
                if (!vpm.valid[t]) continue;
                const Vec3& p = vpm.positions[t];
                auto stencil = grid.stencil(QueryPoint{p.x, p.y, p.z});
                std::vector<std::pair<int, double>> pixel;
                for (const auto& tap : stencil)
                    if (tap.row >= 0 && tap.weight != 0.0)
                        pixel.emplace_back(int(tap.row), tap.weight);
                std::vector<double> val(k, 0.0);
                for (const auto& [row, w] : pixel) {
                    const float* a = grid.row(size_t(row));
                    for (uint32_t c = 0; c < k; ++c) val[c] += w * double(a[c]);
                }
                taps.push_back(std::move(pixel));
                gt.insert(gt.end(), val.begin(), val.end());
            }
        }
        sample.supervision.taps.push_back(std::move(taps));
        sample.supervision.gt_pixels.push_back(std::move(gt));
    }
    return sample;
}

namespace {

Tensor render_loss(const nn::SparseTokenSet& output, const RenderSupervision& sup) {
    std::vector<Tensor> preds, gts;
    const int k = int(sup.channels);
    for (size_t v = 0; v < sup.taps.size(); ++v) {
        if (sup.taps[v].empty()) continue;
        preds.push_back(nn::weighted_row_gather(output.features, sup.taps[v]));
        gts.push_back(Tensor::from_values({int(sup.taps[v].size()), k},
                                          std::vector<double>(sup.gt_pixels[v])));
    }
    if (preds.empty()) throw std::runtime_error("render loss: no valid pixels in any view");
    return nn::l1_loss(nn::concat_rows(preds), nn::concat_rows(gts));
}

} // namespace

VaeTrainer::VaeTrainer(VaeConfig cfg, uint64_t seed, nn::AdamWConfig optcfg,
                       VaeLossWeights w, ReconLossKind kind)
    : vae(cfg, seed), opt(vae.params().tensors(), optcfg), rng(Rng(seed).fork(1)),
      weights(w), loss_kind(kind) {}

VaeLossBreakdown VaeTrainer::step(const VaeTrainSample& sample) {
    vae.params().zero_grad();
    nn::SparseTokenSet input = AttributeVae::grid_tokens(sample.gt_grid);
    LatentGrid lat = vae.encode(input);
    Tensor z = vae.reparameterize(lat, rng);
    DecodeResult dec = vae.decode(lat.coords, z, sample.pyramid, /*teacher_force=*/true);

    Tensor recon;
    if (loss_kind == ReconLossKind::Rendering) {
        recon = render_loss(dec.output, sample.supervision);
    } else {
        recon = nn::mse_loss(dec.output.features, input.features);
    }

    Tensor prune = Tensor::scalar(0.0);
    size_t correct = 0, total = 0;
    for (int s = 0; s < 3; ++s) {
        auto labels = prune_targets(dec.candidates[size_t(s)],
                                    sample.pyramid.levels[size_t(2 - s)]);
        prune = nn::add(prune, prune_bce(dec.prune_logits[size_t(s)], labels));
        const auto& lv = dec.prune_logits[size_t(s)].values();
        for (size_t i = 0; i < labels.size(); ++i)
            correct += (lv[i] >= 0.0 ? 1 : 0) == labels[i] ? 1 : 0;
        total += labels.size();
    }
    prune = nn::scale(prune, 1.0 / 3.0);
    Tensor kl = kl_loss(lat);

    Tensor loss = nn::add(nn::add(nn::scale(recon, weights.l1), nn::scale(prune, weights.prune)),
                          nn::scale(kl, weights.kl));
    VaeLossBreakdown rec;
    rec.l1 = recon.item();
    rec.prune = prune.item();
    rec.kl = kl.item();
    rec.total = loss.item();
    rec.prune_accuracy = total ? double(correct) / double(total) : 1.0;
    if (!std::isfinite(rec.total))
        throw std::runtime_error("vae train step: non-finite loss");
    loss.backward();
    opt.step();
    vae.params().zero_grad();
    return rec;
}

double VaeTrainer::eval_render_l1(const VaeTrainSample& sample) const {
    LatentGrid lat = vae.encode_grid(sample.gt_grid);
    DecodeResult dec = vae.decode(lat.coords, lat.mu, sample.pyramid, true);
    return render_loss(dec.output, sample.supervision).item();
}

} // namespace txg
