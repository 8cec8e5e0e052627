#include "txg/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "txg/flow.hpp"
#include "txg/grid.hpp"
#include "txg/nn/checkpoint.hpp"
#include "txg/nn/sparse_ops.hpp"
#include "txg/pruning.hpp"
#include "txg/renderer.hpp"
#include "txg/segmentation.hpp"
#include "txg/toy_assets.hpp"
#include "txg/uv_baker.hpp"

namespace txg {

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("txg_selftest_" + name)).string();
}

bool trilinear_invariants() {
    TriangleMesh mesh = toy_cube(0.3);
    SparseAttributeGrid grid =
        make_attribute_grid(mesh, 8, color_layout(3), [](const Vec3& p) {
            // affine field: exact under trilinear interpolation
            return std::vector<float>{float(0.2 + 0.5 * p.x), float(0.3 + 0.4 * p.y),
                                      float(0.1 + 0.3 * p.z)};
        });
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        QueryPoint p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        auto taps = grid.stencil(p);
        double mass = 0;
        for (const auto& t : taps) mass += t.weight;
        if (std::fabs(mass - 1.0) > 1e-12) return false;
        auto s = grid.trilinear_query(p);
        if (s.missing_mass == 0.0) {
            double want = 0.2 + 0.5 * p.x;
            if (std::fabs(double(s.values[0]) - want) > 1e-6) return false;
        }
    }
    // exact collapse on a lattice site
    for (size_t i = 0; i < grid.size(); ++i) {
        VoxelCoord c = grid.coord(i);
        QueryPoint p{(c.ix + 0.5) / 8.0 - 0.5, (c.iy + 0.5) / 8.0 - 0.5,
                     (c.iz + 0.5) / 8.0 - 0.5};
        auto s = grid.trilinear_query(p);
        if (s.values[0] != grid.row(i)[0]) return false;
    }
    return true;
}

bool voxelize_cube_count() {
    return voxelize_surface(toy_cube(0.5), 4).size() == 56;
}

bool txgrid_roundtrip() {
    SparseAttributeGrid grid = toy_color_grid(toy_cube(0.3), 8);
    std::string p1 = temp_path("a.txg"), p2 = temp_path("b.txg");
    save_txgrid(grid, p1);
    save_txgrid(load_txgrid(p1), p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    return s1.str() == s2.str() && !s1.str().empty();
}

bool txpos_roundtrip() {
    PositionMap pm = bake_position_map(toy_quad(), 16, 16);
    std::string p = temp_path("a.txpos");
    save_txpos(pm, p);
    PositionMap back = load_txpos(p);
    if (back.width != pm.width || back.height != pm.height) return false;
    for (size_t i = 0; i < pm.valid.size(); ++i) {
        if (back.valid[i] != pm.valid[i]) return false;
        if (float(back.positions[i].x) != float(pm.positions[i].x)) return false;
    }
    return true;
}

bool checkpoint_roundtrip() {
    Rng rng(3);
    nn::ParamStore a;
    a.add("w", nn::Tensor::uniform({3, 4}, rng, 1.0));
    a.add("b", nn::Tensor::uniform({4}, rng, 1.0));
    std::string p = temp_path("a.txckpt");
    nn::save_checkpoint(a, p);
    nn::ParamStore b;
    b.add("w", nn::Tensor::zeros({3, 4}, true));
    b.add("b", nn::Tensor::zeros({4}, true));
    nn::load_checkpoint(b, p);
    for (size_t i = 0; i < a.get("w").numel(); ++i)
        if (float(a.get("w").values()[i]) != float(b.get("w").values()[i])) return false;
    return true;
}

bool render_hits_quad() {
    TriangleMesh mesh = toy_quad(0.4);
    OrthoCamera cam = OrthoCamera::axis("+z", 16, 16);
    PositionMap pm = render_position_map(mesh, cam);
    size_t center = pm.texel(8, 8);
    if (!pm.valid[center]) return false;
    if (std::fabs(pm.positions[center].z) > 1e-9) return false;
    size_t corner = pm.texel(0, 0); // outside the quad
    return pm.valid[corner] == 0;
}

bool autodiff_gradients() {
    Rng rng(5);
    nn::Tensor w1 = nn::Tensor::uniform({3, 5}, rng, 0.5);
    nn::Tensor b1 = nn::Tensor::uniform({5}, rng, 0.5);
    nn::Tensor w2 = nn::Tensor::uniform({5, 2}, rng, 0.5);
    nn::Tensor x = nn::Tensor::uniform({4, 3}, rng, 1.0, false);
    nn::Tensor target = nn::Tensor::uniform({4, 2}, rng, 1.0, false);
    auto f = [&]() {
        nn::Tensor h = nn::gelu(nn::linear(x, w1, b1));
        return nn::mse_loss(nn::matmul(h, w2), target);
    };
    return nn::grad_check(f, {w1, b1, w2}) < 1e-4;
}

bool attention_singleton_oracle() {
    Rng rng(9);
    nn::AttentionParams p = nn::AttentionParams::init(8, 8, 2, rng);
    // far-apart coords: every window block has one token
    std::vector<VoxelCoord> coords = {{0, 0, 0}, {10, 0, 0}, {20, 0, 0}};
    nn::SparseTokenSet tokens{coords, nn::Tensor::uniform({3, 8}, rng, 1.0, false)};
    nn::SparseTokenSet out = nn::windowed_sparse_attention(tokens, 4, p);
    nn::Tensor v = nn::linear(tokens.features, p.wv, p.bv);
    nn::Tensor want = nn::linear(v, p.wo, p.bo);
    for (size_t i = 0; i < want.numel(); ++i)
        if (out.features.values()[i] != want.values()[i]) return false;
    return true;
}

bool pruning_invariants() {
    std::vector<VoxelCoord> coords = {{0, 0, 0}, {0, 0, 1}, {1, 1, 1}, {3, 3, 3}};
    auto coarse = downsample_occupancy(coords, 2);
    if (coarse != std::vector<VoxelCoord>{{0, 0, 0}, {1, 1, 1}}) return false;
    auto keep = threshold_logits({-0.1, 0.0, 0.2});
    return keep == std::vector<uint8_t>{0, 1, 1};
}

bool cfg_identity() {
    DitConfig cfg;
    cfg.d_lat = 4;
    cfg.d_model = 12;
    cfg.heads = 2;
    cfg.blocks = 1;
    DitModel model(cfg, 21);
    std::vector<VoxelCoord> coords = {{0, 0, 0}, {0, 0, 1}};
    Rng rng(2);
    ConditionBundle cond;
    cond.sparse_coords = coords;
    cond.sparse_feats = nn::Tensor::uniform({2, 4}, rng, 1.0, false);
    cond.global_feats = nn::Tensor::uniform({4, 3}, rng, 1.0, false);
    SamplerConfig sc;
    sc.steps = 4;
    sc.guidance = 1.0;
    Rng r1(7), r2(7);
    nn::Tensor a = sample_latents(model, coords, cond, sc, r1);
    // reference: conditional path only, same noise stream
    std::vector<double> x(a.numel());
    for (double& v : x) v = r2.normal();
    auto vel = [&](const std::vector<double>& cur, double t) {
        nn::Tensor xt = nn::Tensor::from_values({2, 4}, std::vector<double>(cur));
        return model.forward(coords, xt, t, cond).values();
    };
    std::vector<double> b = euler_integrate(vel, std::move(x), sc.steps);
    for (size_t i = 0; i < b.size(); ++i)
        if (a.values()[i] != b[i]) return false;
    return true;
}

bool euler_constant_velocity() {
    auto vel = [](const std::vector<double>& cur, double) {
        return std::vector<double>(cur.size(), 2.0);
    };
    std::vector<double> out = euler_integrate(vel, {5.0}, 15);
    return std::fabs(out[0] - 3.0) < 1e-12;
}

bool hungarian_small_oracle() {
    std::vector<std::vector<double>> score = {{0.9, 0.1}, {0.8, 0.7}};
    std::vector<int> m = hungarian_match(score);
    // 0.9 + 0.7 beats 0.1 + 0.8
    return m == std::vector<int>{0, 1};
}

bool cluster_monotone() {
    Rng rng(13);
    std::vector<std::array<double, 3>> raw;
    for (int i = 0; i < 30; ++i)
        raw.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    int prev = int(raw.size()) + 1;
    for (double eps : {0.05, 0.1, 0.2, 0.5, 1.0}) {
        int parts = cluster_labels(raw, eps).part_count;
        if (parts > prev) return false;
        prev = parts;
    }
    return true;
}

bool rng_determinism() {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() != b.next_u64()) return false;
    Rng f1 = Rng(42).fork(1), f2 = Rng(42).fork(2);
    return f1.next_u64() != f2.next_u64();
}

} // namespace

int run_selftest(std::ostream& out) {
    const std::pair<const char*, std::function<bool()>> checks[] = {
        {"trilinear partition/affine/collapse", trilinear_invariants},
        {"voxelize cube R=4 -> 56 cells", voxelize_cube_count},
        {"TXGRID byte round trip", txgrid_roundtrip},
        {"TXPOS round trip", txpos_roundtrip},
        {"TXCKPT1 round trip", checkpoint_roundtrip},
        {"ortho render hits quad", render_hits_quad},
        {"autodiff gradient check", autodiff_gradients},
        {"windowed attention singleton oracle", attention_singleton_oracle},
        {"occupancy downsample + prune threshold", pruning_invariants},
        {"CFG g=1 identity", cfg_identity},
        {"Euler constant-velocity", euler_constant_velocity},
        {"Hungarian 2x2 oracle", hungarian_small_oracle},
        {"cluster count monotone in eps", cluster_monotone},
        {"rng determinism + fork streams", rng_determinism},
    };
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        std::string note;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        if (!ok) ++failures;
        out << std::left << std::setw(42) << name << (ok ? "PASS" : "FAIL") << note << "\n";
    }
    out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
        << "\n";
    return failures;
}

} // namespace txg
