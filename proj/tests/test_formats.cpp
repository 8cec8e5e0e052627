#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "txg/config.hpp"
#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/mesh.hpp"
#include "txg/nn/checkpoint.hpp"
#include "txg/png_io.hpp"
#include "txg/toy_assets.hpp"
#include "txg/uv_baker.hpp"

using namespace txg;
namespace fs = std::filesystem;

namespace {

std::string tmp(const std::string& name) {
    return (fs::temp_directory_path() / ("txg_test_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

} // namespace

TEST_CASE("TXGRID: round trip is byte-identical") {
    SparseAttributeGrid g = toy_color_grid(toy_cube(0.3), 8);
    save_txgrid(g, tmp("g1.txg"));
    SparseAttributeGrid back = load_txgrid(tmp("g1.txg"));
    save_txgrid(back, tmp("g2.txg"));
    CHECK(slurp(tmp("g1.txg")) == slurp(tmp("g2.txg")));
    CHECK(back.resolution() == g.resolution());
    CHECK(back.coords() == g.coords());
    CHECK(back.attributes() == g.attributes());
}

TEST_CASE("TXGRID: malformed files are rejected") {
    SparseAttributeGrid g = toy_color_grid(toy_cube(0.3), 8);
    save_txgrid(g, tmp("ok.txg"));
    std::string bytes = slurp(tmp("ok.txg"));

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        spit(tmp("bad.txg"), bad);
        CHECK_THROWS(load_txgrid(tmp("bad.txg")));
    }
    SUBCASE("truncated records") {
        spit(tmp("bad.txg"), bytes.substr(0, bytes.size() - 7));
        CHECK_THROWS(load_txgrid(tmp("bad.txg")));
    }
    SUBCASE("unsorted coordinates") {
        // swap the first two records (3 u32 coords + 3 f32 attrs each)
        std::string bad = bytes;
        const size_t header = 4 + 4 + 4 + 16 + 8, rec = 12 + 12;
        std::string r0 = bad.substr(header, rec), r1 = bad.substr(header + rec, rec);
        bad.replace(header, rec, r1);
        bad.replace(header + rec, rec, r0);
        spit(tmp("bad.txg"), bad);
        CHECK_THROWS(load_txgrid(tmp("bad.txg")));
    }
    SUBCASE("span counts disagree with channel count") {
        std::string bad = bytes;
        bad[12] = 9; // k_color
        spit(tmp("bad.txg"), bad);
        CHECK_THROWS(load_txgrid(tmp("bad.txg")));
    }
    SUBCASE("missing file") { CHECK_THROWS(load_txgrid(tmp("nope.txg"))); }
}

TEST_CASE("TXPOS: round trip preserves positions and masks") {
    PositionMap pm = bake_position_map(toy_quad(), 16, 16);
    save_txpos(pm, tmp("a.txpos"));
    PositionMap back = load_txpos(tmp("a.txpos"));
    REQUIRE(back.width == pm.width);
    REQUIRE(back.height == pm.height);
    for (size_t t = 0; t < pm.valid.size(); ++t) {
        CHECK(back.valid[t] == pm.valid[t]);
        CHECK(float(back.positions[t].x) == float(pm.positions[t].x));
        CHECK(float(back.positions[t].y) == float(pm.positions[t].y));
        CHECK(float(back.positions[t].z) == float(pm.positions[t].z));
    }
    // second save is byte-identical
    save_txpos(back, tmp("b.txpos"));
    CHECK(slurp(tmp("a.txpos")) == slurp(tmp("b.txpos")));
}

TEST_CASE("TXPOS: malformed header rejected") {
    save_txpos(PositionMap(4, 4), tmp("c.txpos"));
    std::string bytes = slurp(tmp("c.txpos"));
    bytes[1] = 'z';
    spit(tmp("bad.txpos"), bytes);
    CHECK_THROWS(load_txpos(tmp("bad.txpos")));
    spit(tmp("short.txpos"), bytes.substr(0, 10));
    CHECK_THROWS(load_txpos(tmp("short.txpos")));
}

TEST_CASE("TXCKPT1: round trip and mismatch rejection") {
    Rng rng(7);
    nn::ParamStore a;
    a.add("layer.w", nn::Tensor::uniform({4, 3}, rng, 1.0));
    a.add("layer.b", nn::Tensor::uniform({3}, rng, 1.0));
    nn::save_checkpoint(a, tmp("a.ck"));

    nn::ParamStore b;
    b.add("layer.w", nn::Tensor::zeros({4, 3}, true));
    b.add("layer.b", nn::Tensor::zeros({3}, true));
    nn::load_checkpoint(b, tmp("a.ck"));
    for (size_t i = 0; i < 12; ++i)
        CHECK(float(b.get("layer.w").values()[i]) == float(a.get("layer.w").values()[i]));

    nn::save_checkpoint(b, tmp("b.ck"));
    CHECK(slurp(tmp("a.ck")) == slurp(tmp("b.ck")));

    nn::ParamStore wrong_shape;
    wrong_shape.add("layer.w", nn::Tensor::zeros({3, 4}, true));
    wrong_shape.add("layer.b", nn::Tensor::zeros({3}, true));
    CHECK_THROWS(nn::load_checkpoint(wrong_shape, tmp("a.ck")));

    nn::ParamStore wrong_name;
    wrong_name.add("other.w", nn::Tensor::zeros({4, 3}, true));
    wrong_name.add("layer.b", nn::Tensor::zeros({3}, true));
    CHECK_THROWS(nn::load_checkpoint(wrong_name, tmp("a.ck")));

    std::string bytes = slurp(tmp("a.ck"));
    bytes[0] = 'x';
    spit(tmp("bad.ck"), bytes);
    CHECK_THROWS(nn::load_checkpoint(b, tmp("bad.ck")));
}

TEST_CASE("PNG: 8-bit round trip of texture images") {
    TextureImage img(7, 5, 3);
    Rng rng(21);
    for (uint32_t y = 0; y < 5; ++y)
        for (uint32_t x = 0; x < 7; ++x) {
            img.valid[img.texel(x, y)] = rng.uniform() < 0.8 ? 1 : 0;
            for (uint32_t c = 0; c < 3; ++c)
                img.at(x, y)[c] = float(std::round(rng.uniform() * 255.0) / 255.0);
        }
    save_texture_png(img, tmp("a.png"), true);
    TextureImage back = load_texture_png(tmp("a.png"));
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    for (uint32_t y = 0; y < 5; ++y)
        for (uint32_t x = 0; x < 7; ++x) {
            CHECK(back.valid[back.texel(x, y)] == img.valid[img.texel(x, y)]);
            for (uint32_t c = 0; c < 3; ++c)
                CHECK(back.at(x, y)[c] == doctest::Approx(img.at(x, y)[c]).epsilon(1e-6));
        }
}

TEST_CASE("PNG: malformed input rejected") {
    spit(tmp("bad.png"), "definitely not a png file");
    CHECK_THROWS(load_png(tmp("bad.png")));
}

TEST_CASE("OBJ: save/load round trip with UVs, negative and quad faces") {
    TriangleMesh m = toy_cube(0.3);
    save_obj(m, tmp("a.obj"));
    TriangleMesh back = load_obj(tmp("a.obj"));
    REQUIRE(back.face_count() == m.face_count());
    REQUIRE(back.vertices.size() == m.vertices.size());
    for (size_t i = 0; i < m.vertices.size(); ++i)
        CHECK(back.vertices[i].x == doctest::Approx(m.vertices[i].x));
    CHECK(back.faces == m.faces);
    CHECK(back.face_uvs == m.face_uvs);

    // quad face fan-triangulates; negative indices resolve from the end
    spit(tmp("quad.obj"), "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\nf -4 -3 -2\n");
    TriangleMesh q = load_obj(tmp("quad.obj"));
    REQUIRE(q.face_count() == 3);
    CHECK(q.faces[0] == std::array<uint32_t, 3>{0, 1, 2});
    CHECK(q.faces[1] == std::array<uint32_t, 3>{0, 2, 3});
    CHECK(q.faces[2] == std::array<uint32_t, 3>{0, 1, 2});

    spit(tmp("bad.obj"), "v 0 0 0\nf 1 2 3\n");
    CHECK_THROWS(load_obj(tmp("bad.obj"))); // face references missing vertex
}

TEST_CASE("config: parsing, comments, overrides, errors") {
    Config cfg = Config::parse("# comment\nsteps = 100\nlr=1e-3\nname = toy run # trailing\n");
    CHECK(cfg.get_int("steps", 0) == 100);
    CHECK(cfg.get_double("lr", 0) == doctest::Approx(1e-3));
    CHECK(cfg.get("name", "") == "toy run");
    CHECK(cfg.get_int("absent", 7) == 7);
    cfg.set("steps", "5"); // flag override
    CHECK(cfg.get_int("steps", 0) == 5);
    CHECK_THROWS(Config::parse("no equals sign here\n"));
    CHECK_THROWS(cfg.get_int("name", 0));
    CHECK_THROWS(Config::load(tmp("missing.cfg")));
}
