#include "txg/flow.hpp"

#include <cmath>
#include <stdexcept>

namespace txg {

using nn::Tensor;

Tensor rf_interpolate(const Tensor& x0, const Tensor& eps, double t) {
    if (x0.shape() != eps.shape())
        throw std::invalid_argument("rf_interpolate: shape mismatch");
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("rf_interpolate: t outside [0,1]");
    return nn::add(nn::scale(x0, 1.0 - t), nn::scale(eps, t));
}

Tensor rf_target(const Tensor& x0, const Tensor& eps) {
    if (x0.shape() != eps.shape()) throw std::invalid_argument("rf_target: shape mismatch");
    return nn::sub(eps, x0);
}

ConditionBundle ConditionBundle::unconditional() {
    ConditionBundle c;
    c.drop_sparse = true;
    c.drop_global = true;
    return c;
}

Tensor pooled_image_tokens(const TextureImage& img, int grid) {
    if (img.channels < 1) throw std::invalid_argument("pooled_image_tokens: empty image");
    const int kc = std::min<int>(3, int(img.channels));
    Tensor out = Tensor::zeros({grid * grid, 3});
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            uint32_t x0 = uint32_t(gx) * img.width / uint32_t(grid);
            uint32_t x1 = uint32_t(gx + 1) * img.width / uint32_t(grid);
            uint32_t y0 = uint32_t(gy) * img.height / uint32_t(grid);
            uint32_t y1 = uint32_t(gy + 1) * img.height / uint32_t(grid);
            double acc[3] = {0, 0, 0};
            size_t n = 0;
            for (uint32_t y = y0; y < y1; ++y)
                for (uint32_t x = x0; x < x1; ++x) {
                    const float* px = img.at(x, y);
                    for (int c = 0; c < kc; ++c) acc[c] += px[size_t(c)];
                    ++n;
                }
            double* row = out.values().data() + size_t(gy * grid + gx) * 3;
            for (int c = 0; c < 3; ++c) row[c] = n ? acc[c] / double(n) : 0.0;
        }
    }
    return out;
}

ConditionBundle make_condition(const TextureImage& front_img, const PositionMap& vpm,
                               uint32_t resolution, const AttributeVae& vae) {
    ConditionBundle cond;
    cond.global_feats = pooled_image_tokens(front_img);
    SparseAttributeGrid proj = project_image_to_grid(front_img, vpm, resolution);
    if (!proj.empty()) {
        LatentGrid lat = vae.encode_grid(proj);
        cond.sparse_coords = lat.coords;
        cond.sparse_feats = lat.mu.detach();
    }
    return cond;
}

ConditionBundle make_condition_multiview(const std::vector<TextureImage>& imgs,
                                         const std::vector<PositionMap>& vpms,
                                         uint32_t resolution, const AttributeVae& vae) {
    if (imgs.empty() || imgs.size() != vpms.size())
        throw std::invalid_argument("make_condition_multiview: bad view lists");
    ConditionBundle merged = make_condition(imgs[0], vpms[0], resolution, vae);
    for (size_t v = 1; v < imgs.size(); ++v) {
        ConditionBundle c = make_condition(imgs[v], vpms[v], resolution, vae);
        if (!c.sparse_feats.defined()) continue;
        if (!merged.sparse_feats.defined()) {
            merged.sparse_coords = c.sparse_coords;
            merged.sparse_feats = c.sparse_feats;
        } else {
            merged.sparse_coords.insert(merged.sparse_coords.end(), c.sparse_coords.begin(),
                                        c.sparse_coords.end());
            merged.sparse_feats = nn::concat_rows({merged.sparse_feats, c.sparse_feats});
        }
    }
    return merged;
}

// ---------------------------------------------------------------------------

namespace {

void register_attention(nn::ParamStore& store, const std::string& prefix,
                        nn::AttentionParams& p) {
    store.add(prefix + ".wq", p.wq);
    store.add(prefix + ".bq", p.bq);
    store.add(prefix + ".wk", p.wk);
    store.add(prefix + ".bk", p.bk);
    store.add(prefix + ".wv", p.wv);
    store.add(prefix + ".bv", p.bv);
    store.add(prefix + ".wo", p.wo);
    store.add(prefix + ".bo", p.bo);
}

} // namespace

DitModel::DitModel(DitConfig cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.d_model % 6 != 0 || cfg.d_model % cfg.heads != 0)
        throw std::invalid_argument("dit: d_model must divide by 6 and by heads");
    Rng rng(seed);
    auto lin_init = [&](int din, int dout) {
        return Tensor::uniform({din, dout}, rng, 1.0 / std::sqrt(double(din)));
    };
    in_w_ = params_.add("in.w", lin_init(cfg.d_lat, cfg.d_model));
    in_b_ = params_.add("in.b", Tensor::zeros({cfg.d_model}, true));
    cond_sparse_w_ = params_.add("cond.sparse.w", lin_init(cfg.d_lat, cfg.d_model));
    cond_sparse_b_ = params_.add("cond.sparse.b", Tensor::zeros({cfg.d_model}, true));
    cond_global_w_ = params_.add("cond.global.w", lin_init(3, cfg.d_model));
    cond_global_b_ = params_.add("cond.global.b", Tensor::zeros({cfg.d_model}, true));
    null_sparse_ = params_.add("cond.null_sparse",
                               Tensor::uniform({1, cfg.d_model}, rng, 0.02));
    null_global_ = params_.add("cond.null_global",
                               Tensor::uniform({1, cfg.d_model}, rng, 0.02));
    for (int b = 0; b < cfg.blocks; ++b) {
        Block blk;
        blk.self_block = TransformerBlock::init(cfg.d_model, cfg.heads, cfg.ffn_mult, rng);
        blk.cross_sparse = nn::AttentionParams::init(cfg.d_model, cfg.d_model, cfg.heads, rng);
        blk.cross_global = nn::AttentionParams::init(cfg.d_model, cfg.d_model, cfg.heads, rng);
        blk.ln_cross_g = Tensor::full({cfg.d_model}, 1.0, true);
        blk.ln_cross_b = Tensor::zeros({cfg.d_model}, true);
        std::string p = "block" + std::to_string(b);
        blk.self_block.register_params(params_, p + ".self");
        register_attention(params_, p + ".cross_sparse", blk.cross_sparse);
        register_attention(params_, p + ".cross_global", blk.cross_global);
        params_.add(p + ".ln_cross.g", blk.ln_cross_g);
        params_.add(p + ".ln_cross.b", blk.ln_cross_b);
        blocks_.push_back(std::move(blk));
    }
    lnf_g_ = params_.add("final.ln.g", Tensor::full({cfg.d_model}, 1.0, true));
    lnf_b_ = params_.add("final.ln.b", Tensor::zeros({cfg.d_model}, true));
    out_w_ = params_.add("out.w", lin_init(cfg.d_model, cfg.d_lat));
    out_b_ = params_.add("out.b", Tensor::zeros({cfg.d_lat}, true));
}

Tensor DitModel::context_sparse(const ConditionBundle& cond) const {
    if (!cfg_.use_sparse_condition || cond.drop_sparse || !cond.sparse_feats.defined())
        return nn::gather_rows(null_sparse_, {0});
    Tensor proj = nn::linear(cond.sparse_feats, cond_sparse_w_, cond_sparse_b_);
    return nn::add(proj, nn::position_embed(cond.sparse_coords, cfg_.d_model));
}

Tensor DitModel::context_global(const ConditionBundle& cond) const {
    if (cond.drop_global || !cond.global_feats.defined())
        return nn::gather_rows(null_global_, {0});
    return nn::linear(cond.global_feats, cond_global_w_, cond_global_b_);
}

Tensor DitModel::forward(const std::vector<VoxelCoord>& coords, const Tensor& x_t, double t,
                         const ConditionBundle& cond) const {
    if (x_t.rank() != 2 || x_t.dim(1) != cfg_.d_lat)
        throw std::invalid_argument("dit forward: latent width mismatch");
    if (int(coords.size()) != x_t.dim(0))
        throw std::invalid_argument("dit forward: coords/token mismatch");

    Tensor ctx_s = context_sparse(cond);
    Tensor ctx_g = context_global(cond);

    Tensor h = nn::linear(x_t, in_w_, in_b_);
    Tensor temb = nn::time_embed(t, cfg_.d_model);
    h = nn::add_rowvec(h, temb);

    for (const auto& blk : blocks_) {
        const auto& sb = blk.self_block;
        // windowed self-attention
        nn::SparseTokenSet normed{coords, nn::layernorm(h, sb.ln1_g, sb.ln1_b)};
        h = nn::add(h, nn::windowed_sparse_attention(normed, cfg_.window, sb.attn).features);
        // summed dual cross-attention over sparse-latent and global tokens
        Tensor q = nn::layernorm(h, blk.ln_cross_g, blk.ln_cross_b);
        Tensor cross = nn::add(nn::multihead_attention(q, ctx_s, blk.cross_sparse),
                               nn::multihead_attention(q, ctx_g, blk.cross_global));
        h = nn::add(h, cross);
        // feedforward
        Tensor n2 = nn::layernorm(h, sb.ln2_g, sb.ln2_b);
        Tensor ff = nn::linear(nn::gelu(nn::linear(n2, sb.ffn_w1, sb.ffn_b1)), sb.ffn_w2,
                               sb.ffn_b2);
        h = nn::add(h, ff);
    }
    return nn::linear(nn::layernorm(h, lnf_g_, lnf_b_), out_w_, out_b_);
}

// ---------------------------------------------------------------------------

DitTrainer::DitTrainer(DitConfig cfg, uint64_t seed, nn::AdamWConfig optcfg)
    : model(cfg, seed), opt(model.params().tensors(), optcfg), rng(Rng(seed).fork(2)) {}

double DitTrainer::step(const std::vector<DitSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("dit step: empty batch");
    model.params().zero_grad();
    Tensor total = Tensor::scalar(0.0);
    for (const auto& sample : batch) {
        double t = rng.uniform();
        Tensor eps = Tensor::zeros(sample.x0.shape());
        for (double& v : eps.values()) v = rng.normal();
        Tensor x_t = rf_interpolate(sample.x0, eps, t);
        Tensor target = rf_target(sample.x0, eps);

        ConditionBundle cond = sample.cond;
        ++samples_seen;
        if (rng.uniform() < model.config().drop_prob) {
            cond.drop_sparse = true;
            cond.drop_global = true;
            ++samples_dropped;
        }
        Tensor v = model.forward(sample.coords, x_t, t, cond);
        total = nn::add(total, nn::mse_loss(v, target));
    }
    Tensor loss = nn::scale(total, 1.0 / double(batch.size()));
    double value = loss.item();
    if (!std::isfinite(value)) throw std::runtime_error("dit train step: non-finite loss");
    loss.backward();
    opt.step();
    model.params().zero_grad();
    return value;
}

std::vector<double> euler_integrate(
    const std::function<std::vector<double>(const std::vector<double>&, double)>& velocity,
    std::vector<double> x, int steps) {
    if (steps < 1) throw std::invalid_argument("euler_integrate: steps must be >= 1");
    for (int i = 0; i < steps; ++i) {
        double t = double(steps - i) / double(steps);
        double t_next = double(steps - i - 1) / double(steps);
        std::vector<double> v = velocity(x, t);
        if (v.size() != x.size()) throw std::runtime_error("euler_integrate: bad velocity size");
        double dt = t_next - t; // negative: integrating toward t=0
        for (size_t j = 0; j < x.size(); ++j) x[j] += dt * v[j];
    }
    return x;
}

Tensor sample_latents(const DitModel& model, const std::vector<VoxelCoord>& coords,
                      const ConditionBundle& cond, const SamplerConfig& cfg, Rng& rng) {
    if (cfg.steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
    const int n = int(coords.size());
    const int d = model.config().d_lat;
    std::vector<double> x(size_t(n) * size_t(d));
    for (double& v : x) v = rng.normal();

    ConditionBundle null_cond = cond;
    null_cond.drop_sparse = true;
    null_cond.drop_global = true;

    auto velocity = [&](const std::vector<double>& cur, double t) {
        Tensor xt = Tensor::from_values({n, d}, std::vector<double>(cur));
        Tensor v_cond = model.forward(coords, xt, t, cond);
        if (cfg.guidance == 1.0) return v_cond.values();
        Tensor v_null = model.forward(coords, xt, t, null_cond);
        std::vector<double> v(cur.size());
        for (size_t i = 0; i < v.size(); ++i)
            v[i] = v_null.values()[i] + cfg.guidance * (v_cond.values()[i] - v_null.values()[i]);
        return v;
    };
    std::vector<double> x0 = euler_integrate(velocity, std::move(x), cfg.steps);
    return Tensor::from_values({n, d}, std::move(x0));
}

// ---------------------------------------------------------------------------

namespace {

struct ToyMlp {
    nn::ParamStore params;
    Tensor w1, b1, w2, b2, w3, b3;

    explicit ToyMlp(uint64_t seed) {
        Rng rng(seed);
        w1 = params.add("w1", Tensor::uniform({3, 64}, rng, 1.0 / std::sqrt(3.0)));
        b1 = params.add("b1", Tensor::zeros({64}, true));
        w2 = params.add("w2", Tensor::uniform({64, 64}, rng, 1.0 / 8.0));
        b2 = params.add("b2", Tensor::zeros({64}, true));
        w3 = params.add("w3", Tensor::uniform({64, 2}, rng, 1.0 / 8.0));
        b3 = params.add("b3", Tensor::zeros({2}, true));
    }

    Tensor forward(const Tensor& input) const {
        Tensor h = nn::gelu(nn::linear(input, w1, b1));
        h = nn::gelu(nn::linear(h, w2, b2));
        return nn::linear(h, w3, b3);
    }
};

constexpr double kModeX = 1.5;
constexpr double kModeStd = 0.1;

} // namespace

ToyFlowReport toy_flow_benchmark(uint64_t seed, int train_steps, int sample_count,
                                 bool train) {
    ToyMlp mlp(seed);
    Rng rng = Rng(seed).fork(3);
    nn::AdamWConfig optcfg;
    optcfg.lr = 1e-3;
    nn::AdamW opt(mlp.params.tensors(), optcfg);

    const int batch = 128;
    ToyFlowReport report;
    if (train) {
        for (int step = 0; step < train_steps; ++step) {
            std::vector<double> in(size_t(batch) * 3), target(size_t(batch) * 2);
            for (int i = 0; i < batch; ++i) {
                double mx = rng.uniform() < 0.5 ? -kModeX : kModeX;
                double x0[2] = {mx + kModeStd * rng.normal(), kModeStd * rng.normal()};
                double eps[2] = {rng.normal(), rng.normal()};
                double t = rng.uniform();
                in[size_t(i) * 3 + 0] = (1 - t) * x0[0] + t * eps[0];
                in[size_t(i) * 3 + 1] = (1 - t) * x0[1] + t * eps[1];
                in[size_t(i) * 3 + 2] = t;
                target[size_t(i) * 2 + 0] = eps[0] - x0[0];
                target[size_t(i) * 2 + 1] = eps[1] - x0[1];
            }
            Tensor loss = nn::mse_loss(
                mlp.forward(Tensor::from_values({batch, 3}, std::move(in))),
                Tensor::from_values({batch, 2}, std::move(target)));
            report.final_loss = loss.item();
            loss.backward();
            opt.step();
            opt.zero_grad();
        }
    }

    // sample all trajectories in one batch
    std::vector<double> x(size_t(sample_count) * 2);
    for (double& v : x) v = rng.normal();
    const int euler_steps = 50;
    auto velocity = [&](const std::vector<double>& cur, double t) {
        std::vector<double> in(cur.size() / 2 * 3);
        for (size_t i = 0; i < cur.size() / 2; ++i) {
            in[i * 3 + 0] = cur[i * 2 + 0];
            in[i * 3 + 1] = cur[i * 2 + 1];
            in[i * 3 + 2] = t;
        }
        Tensor v = mlp.forward(Tensor::from_values({int(cur.size() / 2), 3}, std::move(in)));
        return v.values();
    };
    std::vector<double> samples = euler_integrate(velocity, std::move(x), euler_steps);

    double sum[2][2] = {{0, 0}, {0, 0}};
    size_t count[2] = {0, 0};
    for (int i = 0; i < sample_count; ++i) {
        int mode = samples[size_t(i) * 2] < 0 ? 0 : 1;
        sum[mode][0] += samples[size_t(i) * 2];
        sum[mode][1] += samples[size_t(i) * 2 + 1];
        ++count[mode];
    }
    for (int m = 0; m < 2; ++m) {
        double truth_x = m == 0 ? -kModeX : kModeX;
        if (count[m] == 0) {
            report.mode_mean_error[size_t(m)] = std::hypot(truth_x, 0.0);
            report.mode_fraction[size_t(m)] = 0.0;
            continue;
        }
        double mean_x = sum[m][0] / double(count[m]);
        double mean_y = sum[m][1] / double(count[m]);
        report.mode_mean_error[size_t(m)] = std::hypot(mean_x - truth_x, mean_y);
        report.mode_fraction[size_t(m)] = double(count[m]) / double(sample_count);
    }
    return report;
}

} // namespace txg
