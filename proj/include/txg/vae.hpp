#pragma once

#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/nn/optim.hpp"
#include "txg/nn/sparse_ops.hpp"
#include "txg/pruning.hpp"
#include "txg/renderer.hpp"

namespace txg {

struct VaeConfig {
    uint32_t resolution = 32;
    uint32_t channels = 3;
    int width1 = 32;  // after first downsample (R/2)
    int width2 = 64;  // R/4
    int width3 = 128; // R/8, transformer width
    int d_lat = 16;
    int transformer_blocks = 2;
    int heads = 4;
    int window = 4;
    int ffn_mult = 2;
    int prune_hidden = 32;        // hidden width of the per-stage prune MLP
    int prune_pos_dim = 24;       // sinusoidal position input width of that MLP
    double prune_logit_gain = 8.0; // fixed output gain on the keep/drop logits
    uint32_t color_channels = 3; // sigmoid-activated output span

    static VaeConfig micro(); // R=8, width 8 everywhere; for gradient checks
};

/// Pre-norm transformer block: windowed self-attention + feedforward.
struct TransformerBlock {
    nn::AttentionParams attn;
    nn::Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    nn::Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;

    static TransformerBlock init(int d, int heads, int ffn_mult, Rng& rng);
    void register_params(nn::ParamStore& store, const std::string& prefix);
    nn::SparseTokenSet apply(const nn::SparseTokenSet& x, int window) const;
};

/// Per-token latent distribution over the R/8 coordinate set.
struct LatentGrid {
    std::vector<VoxelCoord> coords;
    nn::Tensor mu;     // [N, d_lat]
    nn::Tensor logvar; // [N, d_lat], clamped to [-30, 20]
};

struct DecodeResult {
    nn::SparseTokenSet output;                       // final grid tokens at R
    std::vector<nn::Tensor> prune_logits;            // per stage, [N_stage, 1]
    std::vector<std::vector<VoxelCoord>> candidates; // per stage candidate coords
    std::vector<std::vector<uint8_t>> keep_masks;    // per stage applied mask
};

/// Symmetric sparse-conv + transformer attribute VAE with pruning after
/// each upsampling stage.
class AttributeVae {
public:
    AttributeVae(VaeConfig cfg, uint64_t seed);

    const VaeConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    LatentGrid encode(const nn::SparseTokenSet& input) const;
    LatentGrid encode_grid(const SparseAttributeGrid& grid) const;

    nn::Tensor reparameterize(const LatentGrid& lat, Rng& rng) const;

    /// teacher_force: candidate pruning is forced to the ground-truth
    /// occupancy of each pyramid level; otherwise thresholded logits decide.
    DecodeResult decode(const std::vector<VoxelCoord>& latent_coords, const nn::Tensor& z,
                        const OccupancyPyramid& target, bool teacher_force) const;

    /// Non-differentiable convenience: encode, take mu, teacher-free decode.
    SparseAttributeGrid reconstruct(const SparseAttributeGrid& grid,
                                    const OccupancyPyramid& target,
                                    bool teacher_force) const;

    static nn::SparseTokenSet grid_tokens(const SparseAttributeGrid& grid);
    static SparseAttributeGrid tokens_to_grid(const nn::SparseTokenSet& tokens,
                                              uint32_t resolution, ChannelLayout layout);

private:
    VaeConfig cfg_;
    nn::ParamStore params_;

    nn::SparseTokenSet run_blocks(const nn::SparseTokenSet& x,
                                  const std::vector<TransformerBlock>& blocks) const;

    // encoder
    nn::Tensor enc_w1_, enc_b1_, enc_w2_, enc_b2_, enc_w3_, enc_b3_;
    std::vector<TransformerBlock> enc_blocks_;
    nn::Tensor lat_w_, lat_b_;
    // decoder
    nn::Tensor dec_in_w_, dec_in_b_;
    std::vector<TransformerBlock> dec_blocks_;
    nn::Tensor up_w_[3], up_b_[3], up_oct_[3];
    nn::Tensor prune_w1_[3], prune_b1_[3], prune_w2_[3], prune_b2_[3];
    nn::Tensor out_w_, out_b_;
};

nn::Tensor kl_loss(const LatentGrid& lat);

// --- training --------------------------------------------------------------

struct VaeLossWeights {
    double l1 = 1.0;
    double prune = 1.0;
    double kl = 1e-6;
    // out of scope, present but pinned to zero
    double lpips = 0.0;
    double adv = 0.0;
};

/// Precomputed view supervision for one asset: per view, the trilinear taps
/// of each valid pixel into the ground-truth occupancy rows, and the
/// ground-truth pixel values rendered from the input grid.
struct RenderSupervision {
    uint32_t channels = 0;
    std::vector<std::vector<std::vector<std::pair<int, double>>>> taps;
    std::vector<std::vector<double>> gt_pixels; // [view][pixel*k]
};

struct VaeTrainSample {
    SparseAttributeGrid gt_grid;
    OccupancyPyramid pyramid;
    RenderSupervision supervision;
};

VaeTrainSample make_train_sample(const TriangleMesh& mesh, const SparseAttributeGrid& grid,
                                 uint32_t view_size = 32, uint32_t num_views = 6);

struct VaeLossBreakdown {
    double total = 0, l1 = 0, prune = 0, kl = 0;
    double prune_accuracy = 0; // thresholded logits vs labels
};

enum class ReconLossKind { Rendering, CubeMse };

struct VaeTrainer {
    VaeTrainer(VaeConfig cfg, uint64_t seed, nn::AdamWConfig opt = {},
               VaeLossWeights weights = {}, ReconLossKind kind = ReconLossKind::Rendering);

    VaeLossBreakdown step(const VaeTrainSample& sample);
    /// Masked rendering L1 of the teacher-forced reconstruction.
    double eval_render_l1(const VaeTrainSample& sample) const;

    AttributeVae vae;
    nn::AdamW opt;
    Rng rng;
    VaeLossWeights weights;
    ReconLossKind loss_kind;
};

} // namespace txg
