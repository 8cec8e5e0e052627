// texgrid: command-line surface for the sparse attribute-grid pipeline.
#include <CLI11.hpp>

#include <iostream>

#include "txg/config.hpp"
#include "txg/flow.hpp"
#include "txg/nn/checkpoint.hpp"
#include "txg/projection.hpp"
#include "txg/renderer.hpp"
#include "txg/segmentation.hpp"
#include "txg/selftest.hpp"
#include "txg/toy_assets.hpp"
#include "txg/uv_baker.hpp"
#include "txg/vae.hpp"

namespace {

using namespace txg;

TriangleMesh resolve_mesh(const std::string& name) {
    if (name == "quad") return toy_quad();
    if (name == "cube") return toy_cube();
    if (name == "sphere") return toy_sphere();
    return load_obj(name);
}

VaeConfig vae_config_from(const Config& cfg) {
    VaeConfig vc;
    vc.resolution = uint32_t(cfg.get_int("res", int(vc.resolution)));
    vc.width1 = cfg.get_int("vae_width1", vc.width1);
    vc.width2 = cfg.get_int("vae_width2", vc.width2);
    vc.width3 = cfg.get_int("vae_width3", vc.width3);
    vc.d_lat = cfg.get_int("d_lat", vc.d_lat);
    vc.transformer_blocks = cfg.get_int("vae_blocks", vc.transformer_blocks);
    vc.heads = cfg.get_int("vae_heads", vc.heads);
    vc.window = cfg.get_int("window", vc.window);
    return vc;
}

DitConfig dit_config_from(const Config& cfg) {
    DitConfig dc;
    dc.d_lat = cfg.get_int("d_lat", dc.d_lat);
    dc.d_model = cfg.get_int("dit_d_model", dc.d_model);
    dc.heads = cfg.get_int("dit_heads", dc.heads);
    dc.blocks = cfg.get_int("dit_blocks", dc.blocks);
    dc.window = cfg.get_int("window", dc.window);
    dc.drop_prob = cfg.get_double("drop_prob", dc.drop_prob);
    dc.use_sparse_condition = cfg.get_int("use_sparse_condition", 1) != 0;
    return dc;
}

TextureImage front_view_image(const TriangleMesh& mesh, const SparseAttributeGrid& grid,
                              uint32_t size) {
    OrthoCamera cam = OrthoCamera::axis("+z", size, size);
    PositionMap vpm = render_position_map(mesh, cam);
    return render_view(grid, vpm);
}

int run_bake_posmap(const std::string& mesh_path, uint32_t w, uint32_t h,
                    const std::string& out) {
    TriangleMesh mesh = resolve_mesh(mesh_path);
    BakeStats stats;
    PositionMap pm = bake_position_map(mesh, w, h, &stats);
    save_txpos(pm, out);
    std::cout << "baked " << w << "x" << h << " position map ("
              << stats.degenerate_triangles << " degenerate triangles skipped)\n";
    return 0;
}

int run_render_posmap(const std::string& mesh_path, const std::string& view, uint32_t w,
                      uint32_t h, const std::string& out) {
    TriangleMesh mesh = resolve_mesh(mesh_path);
    OrthoCamera cam = OrthoCamera::axis(view, w, h);
    save_txpos(render_position_map(mesh, cam), out);
    return 0;
}

int run_voxelize(const std::string& mesh_path, uint32_t res, const std::string& out) {
    TriangleMesh mesh = resolve_mesh(mesh_path);
    std::vector<VoxelCoord> coords = voxelize_surface(mesh, res);
    ChannelLayout layout;
    layout.k_extra = 1; // occupancy flag
    std::vector<float> attrs(coords.size(), 1.0f);
    save_txgrid(SparseAttributeGrid::from_rows(res, layout, std::move(coords), std::move(attrs)),
                out);
    return 0;
}

int run_project(const std::string& image_path, const std::string& posmap_path, uint32_t res,
                const std::string& out) {
    TextureImage img = load_texture_png(image_path);
    PositionMap vpm = load_txpos(posmap_path);
    save_txgrid(project_image_to_grid(img, vpm, res), out);
    return 0;
}

int run_bake_texture(const std::string& grid_path, const std::string& posmap_path,
                     const std::string& span, uint32_t dilate, const std::string& out) {
    SparseAttributeGrid grid = load_txgrid(grid_path);
    PositionMap pm = load_txpos(posmap_path);
    TextureImage img = bake_texture(grid, pm, span);
    if (dilate > 0) img = dilate_texture(img, dilate);
    save_texture_png(img, out);
    return 0;
}

int run_train_vae(const Config& cfg, const std::string& out) {
    VaeConfig vc = vae_config_from(cfg);
    uint64_t seed = cfg.get_u64("seed", 1);
    int steps = cfg.get_int("steps", 200);
    nn::AdamWConfig oc;
    oc.lr = cfg.get_double("lr", oc.lr);
    VaeLossWeights w;
    w.l1 = cfg.get_double("l1", w.l1);
    w.prune = cfg.get_double("prune", w.prune);
    w.kl = cfg.get_double("kl", w.kl);
    ReconLossKind kind =
        cfg.get("loss", "render") == "cube" ? ReconLossKind::CubeMse : ReconLossKind::Rendering;

    TriangleMesh mesh = resolve_mesh(cfg.get("mesh", "sphere"));
    SparseAttributeGrid grid = cfg.has("grid") ? load_txgrid(cfg.get("grid", ""))
                                               : toy_color_grid(mesh, vc.resolution);
    uint32_t view_size = uint32_t(cfg.get_int("view_size", 32));
    VaeTrainSample sample = make_train_sample(mesh, grid, view_size);

    VaeTrainer trainer(vc, seed, oc, w, kind);
    for (int s = 0; s < steps; ++s) {
        VaeLossBreakdown b = trainer.step(sample);
        if (s % 50 == 0 || s == steps - 1)
            std::cout << "step " << s << " total " << b.total << " l1 " << b.l1 << " prune "
                      << b.prune << " acc " << b.prune_accuracy << "\n";
    }
    std::cout << "final render L1 " << trainer.eval_render_l1(sample) << "\n";
    nn::save_checkpoint(trainer.vae.params(), out);
    return 0;
}

int run_train_dit(const Config& cfg, const std::string& out) {
    uint32_t res = uint32_t(cfg.get_int("res", 16));
    int assets = cfg.get_int("assets", 5);
    int steps = cfg.get_int("steps", 200);
    uint64_t seed = cfg.get_u64("seed", 1);

    VaeConfig vc = vae_config_from(cfg);
    vc.resolution = res;
    AttributeVae vae(vc, cfg.get_u64("vae_seed", 7));
    if (cfg.has("vae_ckpt")) nn::load_checkpoint(vae.params(), cfg.get("vae_ckpt", ""));

    std::vector<DitSample> batch;
    for (int i = 0; i < assets; ++i) {
        SparseAttributeGrid grid = toy_asset_grid(i, res);
        LatentGrid lat = vae.encode_grid(grid);
        DitSample s;
        s.coords = lat.coords;
        s.x0 = lat.mu.detach();
        s.cond.sparse_coords = lat.coords;
        s.cond.sparse_feats = s.x0;
        s.cond.global_feats =
            pooled_image_tokens(front_view_image(toy_asset_mesh(i), grid, 32));
        batch.push_back(std::move(s));
    }

    nn::AdamWConfig oc;
    oc.lr = cfg.get_double("lr", 1e-3);
    DitTrainer trainer(dit_config_from(cfg), seed, oc);
    double loss = 0;
    for (int s = 0; s < steps; ++s) {
        loss = trainer.step(batch);
        if (s % 50 == 0 || s == steps - 1) std::cout << "step " << s << " loss " << loss << "\n";
    }
    nn::save_checkpoint(trainer.model.params(), out);
    return 0;
}

int run_sample(const std::string& vae_ckpt, const std::string& dit_ckpt,
               const std::string& cond_path, const std::string& image_path, int steps,
               double guidance, uint64_t seed, const std::string& config_path,
               const std::string& out) {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    SparseAttributeGrid cond_grid = load_txgrid(cond_path);

    VaeConfig vc = vae_config_from(cfg);
    vc.resolution = cond_grid.resolution();
    AttributeVae vae(vc, 7);
    nn::load_checkpoint(vae.params(), vae_ckpt);

    DitModel dit(dit_config_from(cfg), 1);
    nn::load_checkpoint(dit.params(), dit_ckpt);

    LatentGrid lat = vae.encode_grid(cond_grid);
    ConditionBundle cond;
    cond.sparse_coords = lat.coords;
    cond.sparse_feats = lat.mu.detach();
    if (!image_path.empty())
        cond.global_feats = pooled_image_tokens(load_texture_png(image_path));

    SamplerConfig sc;
    sc.steps = steps;
    sc.guidance = guidance;
    Rng rng(seed);
    nn::Tensor z = sample_latents(dit, lat.coords, cond, sc, rng);

    OccupancyPyramid pyramid = OccupancyPyramid::build(cond_grid.coords(), vc.resolution);
    DecodeResult dec = vae.decode(lat.coords, z, pyramid, false);
    save_txgrid(AttributeVae::tokens_to_grid(dec.output, vc.resolution,
                                             color_layout(vc.color_channels)),
                out);
    std::cout << "sampled grid with " << dec.output.size() << " voxels\n";
    return 0;
}

int run_segment(const std::string& grid_path, const std::string& mesh_path, double eps,
                uint64_t seed, const std::string& out, const std::string& texture_out,
                uint32_t texture_size) {
    SparseAttributeGrid grid = load_txgrid(grid_path);
    TriangleMesh mesh = resolve_mesh(mesh_path);
    RawFaceLabels raw = assign_labels(grid, mesh);
    PartSegmentation seg = cluster_labels(raw.labels, eps);
    save_part_ids(seg, out);
    std::cout << seg.part_count << " parts over " << seg.face_part.size() << " faces\n";
    if (!texture_out.empty()) {
        Rng rng(seed);
        auto palette = random_palette(size_t(seg.part_count), rng);
        save_texture_png(part_texture(seg, mesh, texture_size, texture_size, palette),
                         texture_out);
    }
    return 0;
}

PartSegmentation parts_from_ids(std::vector<int> ids) {
    PartSegmentation seg;
    int max_id = -1;
    for (int v : ids) {
        if (v < 0) throw std::runtime_error("part id file: negative id");
        max_id = std::max(max_id, v);
    }
    seg.face_part = std::move(ids);
    seg.part_count = max_id + 1;
    return seg;
}

int run_eval_miou(const std::string& pred_path, const std::string& gt_path,
                  const std::string& mesh_path) {
    PartSegmentation pred = parts_from_ids(load_part_ids(pred_path));
    PartSegmentation gt = parts_from_ids(load_part_ids(gt_path));
    TriangleMesh mesh = resolve_mesh(mesh_path);
    if (pred.face_part.size() != mesh.face_count() || gt.face_part.size() != mesh.face_count())
        throw std::runtime_error("eval-miou: id count does not match mesh faces");
    std::vector<double> areas(mesh.face_count());
    for (size_t f = 0; f < mesh.face_count(); ++f) areas[f] = mesh.face_area(f);
    std::cout << "mIoU " << miou(pred, gt, areas) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse attribute-grid texturing pipeline"};
    app.require_subcommand(1);

    std::string mesh_path, out, view = "+z", grid_path, posmap_path, image_path;
    std::string span = "color", config_path, vae_ckpt, dit_ckpt, pred_path, gt_path;
    std::string texture_out;
    std::vector<uint32_t> size = {64, 64};
    uint32_t res = 32, dilate = 0, texture_size = 256;
    int steps = 15;
    double guidance = 3.0, eps = 0.1;
    uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> overrides;

    auto* bake = app.add_subcommand("bake-posmap", "bake a UV position map");
    bake->add_option("--mesh", mesh_path)->required();
    bake->add_option("--size", size)->expected(2);
    bake->add_option("--out", out)->required();

    auto* rview = app.add_subcommand("render-posmap", "render a view position map");
    rview->add_option("--mesh", mesh_path)->required();
    rview->add_option("--view", view);
    rview->add_option("--size", size)->expected(2);
    rview->add_option("--out", out)->required();

    auto* vox = app.add_subcommand("voxelize", "surface occupancy grid");
    vox->add_option("--mesh", mesh_path)->required();
    vox->add_option("--res", res);
    vox->add_option("--out", out)->required();

    auto* proj = app.add_subcommand("project", "splat an image into a condition grid");
    proj->add_option("--image", image_path)->required();
    proj->add_option("--posmap", posmap_path)->required();
    proj->add_option("--res", res);
    proj->add_option("--out", out)->required();

    auto* baket = app.add_subcommand("bake-texture", "bake grid attributes into a texture");
    baket->add_option("--grid", grid_path)->required();
    baket->add_option("--posmap", posmap_path)->required();
    baket->add_option("--span", span);
    baket->add_option("--dilate", dilate);
    baket->add_option("--out", out)->required();

    auto* tvae = app.add_subcommand("train-vae", "train the attribute VAE");
    tvae->add_option("--config", config_path)->required();
    tvae->add_option("--seed", seed);
    tvae->add_option("--out", out)->required();

    auto* tdit = app.add_subcommand("train-dit", "train the flow transformer");
    tdit->add_option("--config", config_path)->required();
    tdit->add_option("--seed", seed);
    tdit->add_option("--out", out)->required();

    auto* samp = app.add_subcommand("sample", "sample a grid with the trained models");
    samp->add_option("--vae", vae_ckpt)->required();
    samp->add_option("--dit", dit_ckpt)->required();
    samp->add_option("--cond", grid_path)->required();
    samp->add_option("--image", image_path);
    samp->add_option("--steps", steps);
    samp->add_option("--cfg", guidance);
    samp->add_option("--seed", seed);
    samp->add_option("--config", config_path);
    samp->add_option("--out", out)->required();

    auto* seg = app.add_subcommand("segment", "per-face part segmentation");
    seg->add_option("--grid", grid_path)->required();
    seg->add_option("--mesh", mesh_path)->required();
    seg->add_option("--eps", eps);
    seg->add_option("--seed", seed);
    seg->add_option("--out", out)->required();
    seg->add_option("--texture", texture_out);
    seg->add_option("--texture-size", texture_size);

    auto* emiou = app.add_subcommand("eval-miou", "class-agnostic mIoU of two labelings");
    emiou->add_option("--pred", pred_path)->required();
    emiou->add_option("--gt", gt_path)->required();
    emiou->add_option("--mesh", mesh_path)->required();

    auto* stest = app.add_subcommand("selftest", "run the invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bake->parsed()) return run_bake_posmap(mesh_path, size[0], size[1], out);
        if (rview->parsed()) return run_render_posmap(mesh_path, view, size[0], size[1], out);
        if (vox->parsed()) return run_voxelize(mesh_path, res, out);
        if (proj->parsed()) return run_project(image_path, posmap_path, res, out);
        if (baket->parsed()) return run_bake_texture(grid_path, posmap_path, span, dilate, out);
        if (tvae->parsed() || tdit->parsed()) {
            Config cfg = Config::load(config_path);
            if (seed != 0) cfg.set("seed", std::to_string(seed));
            return tvae->parsed() ? run_train_vae(cfg, out) : run_train_dit(cfg, out);
        }
        if (samp->parsed())
            return run_sample(vae_ckpt, dit_ckpt, grid_path, image_path, steps, guidance, seed,
                              config_path, out);
        if (seg->parsed())
            return run_segment(grid_path, mesh_path, eps, seed, out, texture_out, texture_size);
        if (emiou->parsed()) return run_eval_miou(pred_path, gt_path, mesh_path);
        if (stest->parsed()) return run_selftest(std::cout) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
