#include <doctest.h>

#include <cmath>
#include <functional>

#include "txg/grid.hpp"
#include "txg/rng.hpp"

using namespace txg;

namespace {

// all lattice sites filled from a function of the cell center
SparseAttributeGrid dense_grid(uint32_t r, uint32_t k,
                               const std::function<std::vector<float>(double, double, double)>& f) {
    SparseAttributeGrid g(r, color_layout(k));
    for (int32_t x = 0; x < int32_t(r); ++x)
        for (int32_t y = 0; y < int32_t(r); ++y)
            for (int32_t z = 0; z < int32_t(r); ++z) {
                double px = (x + 0.5) / r - 0.5, py = (y + 0.5) / r - 0.5,
                       pz = (z + 0.5) / r - 0.5;
                g.insert({x, y, z}, f(px, py, pz));
            }
    return g;
}

} // namespace

TEST_CASE("insert round trip and replacement") {
    SparseAttributeGrid g(8, color_layout(3));
    g.insert({1, 2, 3}, {0.1f, 0.2f, 0.3f});
    auto row = g.find({1, 2, 3});
    REQUIRE(row.has_value());
    CHECK(g.row(*row)[1] == 0.2f);

    g.insert({1, 2, 3}, {0.9f, 0.8f, 0.7f});
    CHECK(g.size() == 1);
    CHECK(g.row(*g.find({1, 2, 3}))[0] == 0.9f);
}

TEST_CASE("insert errors") {
    SparseAttributeGrid g(8, color_layout(3));
    CHECK_THROWS(g.insert({8, 0, 0}, {0.f, 0.f, 0.f}));    // out of range
    CHECK_THROWS(g.insert({-1, 0, 0}, {0.f, 0.f, 0.f}));
    CHECK_THROWS(g.insert({0, 0, 0}, {0.f, 0.f}));         // wrong width
}

TEST_CASE("iteration order is lexicographic, z fastest") {
    SparseAttributeGrid g(4, color_layout(1));
    g.insert({3, 0, 0}, {1.f});
    g.insert({0, 0, 1}, {2.f});
    g.insert({0, 0, 0}, {3.f});
    g.insert({0, 1, 0}, {4.f});
    REQUIRE(g.size() == 4);
    CHECK(g.coord(0) == VoxelCoord{0, 0, 0});
    CHECK(g.coord(1) == VoxelCoord{0, 0, 1});
    CHECK(g.coord(2) == VoxelCoord{0, 1, 0});
    CHECK(g.coord(3) == VoxelCoord{3, 0, 0});
}

TEST_CASE("from_rows rejects duplicates") {
    CHECK_THROWS(SparseAttributeGrid::from_rows(4, color_layout(1),
                                                {{0, 0, 0}, {0, 0, 0}}, {1.f, 2.f}));
}

TEST_CASE("voxelize: quad on a shared cell face hits exactly both cells") {
    TriangleMesh m;
    m.vertices = {{0, -0.25, -0.25}, {0, 0, -0.25}, {0, 0, 0}, {0, -0.25, 0}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    auto cells = voxelize_surface(m, 4);
    // hand oracle: the quad spans one cell face at x=0 between ix=1 and ix=2
    CHECK(cells == std::vector<VoxelCoord>{{1, 1, 1}, {2, 1, 1}});
}

TEST_CASE("voxelize: degenerate triangle contributes vertex cells") {
    TriangleMesh m;
    m.vertices = {{-0.3, -0.3, -0.3}, {-0.3, -0.3, -0.3}, {-0.3, -0.3, -0.3}};
    m.faces = {{0, 1, 2}};
    auto cells = voxelize_surface(m, 4);
    CHECK(cells == std::vector<VoxelCoord>{{0, 0, 0}});
}

TEST_CASE("voxelize: full cube surface at R=4 covers the 56 boundary cells") {
    TriangleMesh m;
    const double h = 0.5;
    auto add_quad = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        uint32_t base = uint32_t(m.vertices.size());
        m.vertices.insert(m.vertices.end(), {a, b, c, d});
        m.faces.push_back({base, base + 1, base + 2});
        m.faces.push_back({base, base + 2, base + 3});
    };
    add_quad({h, -h, -h}, {h, h, -h}, {h, h, h}, {h, -h, h});
    add_quad({-h, -h, -h}, {-h, h, -h}, {-h, h, h}, {-h, -h, h});
    add_quad({-h, h, -h}, {h, h, -h}, {h, h, h}, {-h, h, h});
    add_quad({-h, -h, -h}, {h, -h, -h}, {h, -h, h}, {-h, -h, h});
    add_quad({-h, -h, h}, {h, -h, h}, {h, h, h}, {-h, h, h});
    add_quad({-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h});
    auto cells = voxelize_surface(m, 4);
    CHECK(cells.size() == 56);
    for (const auto& c : cells) {
        bool boundary = c.ix == 0 || c.ix == 3 || c.iy == 0 || c.iy == 3 || c.iz == 0 || c.iz == 3;
        CHECK(boundary);
    }
}

TEST_CASE("voxelize: empty mesh is an error") {
    CHECK_THROWS(voxelize_surface(TriangleMesh{}, 4));
}

TEST_CASE("trilinear: lattice-site collapse is exact") {
    auto g = dense_grid(8, 3, [](double x, double y, double z) {
        return std::vector<float>{float(x + 0.6), float(y + 0.6), float(z + 0.6)};
    });
    auto s = g.trilinear_query({(2 + 0.5) / 8.0 - 0.5, (5 + 0.5) / 8.0 - 0.5, (7 + 0.5) / 8.0 - 0.5});
    CHECK(s.missing_mass == 0.0);
    CHECK(s.values[0] == g.row(*g.find({2, 5, 7}))[0]);
    CHECK(s.values[2] == g.row(*g.find({2, 5, 7}))[2]);
}

TEST_CASE("trilinear: cell center averages the 8 corners") {
    // corners hold the standard basis directions in a 1-channel grid
    SparseAttributeGrid g(4, color_layout(1));
    float vals[8] = {1, 2, 3, 4, 5, 6, 7, 8};
    int i = 0;
    for (int32_t x = 1; x <= 2; ++x)
        for (int32_t y = 1; y <= 2; ++y)
            for (int32_t z = 1; z <= 2; ++z) g.insert({x, y, z}, {vals[i++]});
    // midpoint between cell centers (1,1,1) and (2,2,2)
    auto s = g.trilinear_query({0, 0, 0});
    CHECK(s.missing_mass == doctest::Approx(0.0));
    CHECK(double(s.values[0]) == doctest::Approx(4.5).epsilon(1e-12)); // mean of 1..8
}

TEST_CASE("trilinear: affine field reproduced at interior points") {
    // power-of-two coefficients keep every f32 lattice value exact, so
    // interpolation reproduces the affine field to double rounding
    auto g = dense_grid(16, 1, [](double x, double y, double z) {
        return std::vector<float>{float(0.5 + 0.25 * x + 0.125 * y + 0.0625 * z)};
    });
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        // interior: stay a cell away from the clamped boundary band
        double x = rng.uniform(-0.4, 0.4), y = rng.uniform(-0.4, 0.4), z = rng.uniform(-0.4, 0.4);
        auto s = g.trilinear_query({x, y, z});
        CHECK(std::fabs(double(s.values[0]) - (0.5 + 0.25 * x + 0.125 * y + 0.0625 * z)) < 1e-9);
    }
}

TEST_CASE("trilinear: partition of unity and weight bounds") {
    SparseAttributeGrid g(8, color_layout(1));
    g.insert({3, 3, 3}, {1.f});
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        QueryPoint p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        auto taps = g.stencil(p);
        double sum = 0;
        for (const auto& t : taps) {
            CHECK(t.weight >= 0.0);
            CHECK(t.weight <= 1.0);
            sum += t.weight;
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("trilinear: missing corners report missing mass; fill and renormalize") {
    SparseAttributeGrid g(4, color_layout(1));
    g.insert({1, 1, 1}, {1.0f});
    // query at the stored cell center: single corner carries full weight
    QueryPoint site{(1 + 0.5) / 4.0 - 0.5, (1 + 0.5) / 4.0 - 0.5, (1 + 0.5) / 4.0 - 0.5};
    auto s0 = g.trilinear_query(site);
    CHECK(s0.missing_mass == 0.0);
    CHECK(s0.values[0] == 1.0f);

    // shift a quarter cell: weight splits, 7 corners missing
    QueryPoint p{site.x + 0.25 / 4.0, site.y, site.z};
    auto s1 = g.trilinear_query(p);
    CHECK(double(s1.missing_mass) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(double(s1.values[0]) == doctest::Approx(0.75).epsilon(1e-12));

    TrilinearOptions fill;
    fill.fill = {2.0f};
    auto s2 = g.trilinear_query(p, fill);
    CHECK(double(s2.values[0]) == doctest::Approx(0.75 + 0.25 * 2.0).epsilon(1e-12));

    TrilinearOptions renorm;
    renorm.renormalize = true;
    auto s3 = g.trilinear_query(p, renorm);
    CHECK(double(s3.values[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batch query equals scalar loop and is permutation independent") {
    auto g = dense_grid(8, 2, [](double x, double y, double z) {
        return std::vector<float>{float(x * y + 0.5), float(z + 0.5)};
    });
    Rng rng(5);
    std::vector<QueryPoint> pts;
    for (int i = 0; i < 200; ++i)
        pts.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    auto batch = g.batch_query(pts);
    REQUIRE(batch.size() == pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        auto s = g.trilinear_query(pts[i]);
        CHECK(batch[i].values == s.values);
        CHECK(batch[i].missing_mass == s.missing_mass);
    }
    std::vector<QueryPoint> rev(pts.rbegin(), pts.rend());
    auto batch_rev = g.batch_query(rev);
    for (size_t i = 0; i < pts.size(); ++i)
        CHECK(batch_rev[pts.size() - 1 - i].values == batch[i].values);
}

TEST_CASE("determinism: identical grid and queries give bit-identical outputs") {
    auto g1 = dense_grid(8, 1, [](double x, double, double) { return std::vector<float>{float(x)}; });
    auto g2 = dense_grid(8, 1, [](double x, double, double) { return std::vector<float>{float(x)}; });
    Rng r1(9), r2(9);
    for (int i = 0; i < 100; ++i) {
        QueryPoint p1{r1.uniform(-0.5, 0.5), r1.uniform(-0.5, 0.5), r1.uniform(-0.5, 0.5)};
        QueryPoint p2{r2.uniform(-0.5, 0.5), r2.uniform(-0.5, 0.5), r2.uniform(-0.5, 0.5)};
        CHECK(g1.trilinear_query(p1).values == g2.trilinear_query(p2).values);
    }
}

TEST_CASE("channel layout spans") {
    ChannelLayout l;
    l.k_color = 3;
    l.k_semantic = 3;
    l.k_extra = 1;
    CHECK(l.total() == 7);
    CHECK(l.span("color") == std::pair<uint32_t, uint32_t>{0, 3});
    CHECK(l.span("semantic") == std::pair<uint32_t, uint32_t>{3, 3});
    CHECK(l.span("extra") == std::pair<uint32_t, uint32_t>{6, 1});
    CHECK(l.span("all") == std::pair<uint32_t, uint32_t>{0, 7});
    CHECK_THROWS(l.span("pbr"));    // empty span
    CHECK_THROWS(l.span("bogus"));
}
