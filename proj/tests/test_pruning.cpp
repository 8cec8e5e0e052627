#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "txg/pruning.hpp"
#include "txg/rng.hpp"
#include "txg/toy_assets.hpp"

using namespace txg;

namespace {

std::vector<VoxelCoord> random_coords(size_t n, int32_t range, uint64_t seed) {
    Rng rng(seed);
    std::set<VoxelCoord> s;
    while (s.size() < n)
        s.insert({int32_t(rng.next_below(uint64_t(range))), int32_t(rng.next_below(uint64_t(range))),
                  int32_t(rng.next_below(uint64_t(range)))});
    return {s.begin(), s.end()};
}

} // namespace

TEST_CASE("downsample: floor division and dedup") {
    CHECK(downsample_occupancy({{5, 3, 7}}, 2) == std::vector<VoxelCoord>{{2, 1, 3}});

    std::vector<VoxelCoord> children;
    for (int32_t x = 2; x <= 3; ++x)
        for (int32_t y = 4; y <= 5; ++y)
            for (int32_t z = 6; z <= 7; ++z) children.push_back({x, y, z});
    CHECK(downsample_occupancy(children, 2) == std::vector<VoxelCoord>{{1, 2, 3}});

    CHECK_THROWS(downsample_occupancy({{0, 0, 0}}, 3));
}

TEST_CASE("downsample: factor 4 matches brute-force map-and-dedup") {
    auto coords = random_coords(100, 32, 77);
    auto got = downsample_occupancy(coords, 4);
    std::set<VoxelCoord> want;
    for (const auto& c : coords) want.insert({c.ix / 4, c.iy / 4, c.iz / 4});
    CHECK(got == std::vector<VoxelCoord>(want.begin(), want.end()));
}

TEST_CASE("downsample by 8 equals downsample by 2 three times") {
    auto coords = random_coords(200, 64, 5);
    auto by8 = downsample_occupancy(coords, 8);
    auto by222 = downsample_occupancy(downsample_occupancy(downsample_occupancy(coords, 2), 2), 2);
    CHECK(by8 == by222);
}

TEST_CASE("pyramid levels obey the child-occupancy rule") {
    auto coords = voxelize_surface(toy_sphere(0.3), 16);
    OccupancyPyramid pyr = OccupancyPyramid::build(coords, 16);
    CHECK(pyr.levels[0] == coords);
    for (int l = 1; l < 4; ++l) {
        std::set<VoxelCoord> coarse(pyr.levels[size_t(l)].begin(), pyr.levels[size_t(l)].end());
        // every parent has a child, every child has its parent
        for (const auto& c : pyr.levels[size_t(l - 1)])
            CHECK(coarse.count({c.ix / 2, c.iy / 2, c.iz / 2}));
        for (const auto& p : coarse) {
            bool has_child = false;
            for (const auto& c : pyr.levels[size_t(l - 1)])
                if (c.ix / 2 == p.ix && c.iy / 2 == p.iy && c.iz / 2 == p.iz) has_child = true;
            CHECK(has_child);
        }
    }
}

TEST_CASE("prune_targets: membership bitmap") {
    std::vector<VoxelCoord> pred = {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
    CHECK(prune_targets(pred, pred) == std::vector<uint8_t>{1, 1, 1});
    CHECK(prune_targets(pred, {{9, 9, 9}}) == std::vector<uint8_t>{0, 0, 0});
    CHECK(prune_targets(pred, {{1, 1, 1}, {7, 7, 7}}) == std::vector<uint8_t>{0, 1, 0});

    auto p = random_coords(50, 16, 3);
    auto g = random_coords(50, 16, 4);
    auto labels = prune_targets(p, g);
    std::set<VoxelCoord> gt(g.begin(), g.end());
    for (size_t i = 0; i < p.size(); ++i) CHECK(labels[i] == (gt.count(p[i]) ? 1 : 0));
}

TEST_CASE("prune_bce: analytic values") {
    auto logits = nn::Tensor::from_values({3}, {20.0, 20.0, 20.0});
    CHECK(prune_bce(logits, {1, 1, 1}).item() < 1e-8); // saturated correct

    auto zero = nn::Tensor::zeros({4});
    CHECK(prune_bce(zero, {0, 1, 0, 1}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // random small case vs long-double direct formula
    Rng rng(6);
    std::vector<double> s(8);
    std::vector<uint8_t> y(8);
    for (size_t i = 0; i < 8; ++i) {
        s[i] = rng.uniform(-4.0, 4.0);
        y[i] = rng.uniform() < 0.5 ? 0 : 1;
    }
    long double want = 0;
    for (size_t i = 0; i < 8; ++i) {
        long double sig = 1.0L / (1.0L + std::exp(-(long double)s[i]));
        want += -(y[i] * std::log(sig) + (1 - y[i]) * std::log(1.0L - sig));
    }
    want /= 8;
    auto t = nn::Tensor::from_values({8}, std::vector<double>(s));
    CHECK(prune_bce(t, y).item() == doctest::Approx(double(want)).epsilon(1e-10));

    CHECK_THROWS(prune_bce(zero, {1, 0}));
}

TEST_CASE("prune_bce: gradient matches finite differences") {
    Rng rng(8);
    nn::Tensor logits = nn::Tensor::uniform({6}, rng, 2.0);
    std::vector<uint8_t> labels = {1, 0, 1, 1, 0, 0};
    auto f = [&]() { return prune_bce(logits, labels); };
    CHECK(nn::grad_check(f, {logits}) < 1e-6);
}

TEST_CASE("apply_prune: identity, empty, alternating") {
    SparseAttributeGrid g = toy_color_grid(toy_cube(0.3), 8);
    std::vector<uint8_t> all(g.size(), 1);
    SparseAttributeGrid same = apply_prune(g, all);
    CHECK(same.coords() == g.coords());
    CHECK(same.attributes() == g.attributes());

    CHECK(apply_prune(g, std::vector<uint8_t>(g.size(), 0)).empty());

    std::vector<uint8_t> alt(g.size());
    for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
    SparseAttributeGrid half = apply_prune(g, alt);
    std::set<VoxelCoord> kept;
    for (size_t i = 0; i < g.size(); ++i)
        if (alt[i]) kept.insert(g.coord(i));
    CHECK(half.size() == kept.size());
    for (const auto& c : half.coords()) CHECK(kept.count(c));

    // idempotence: pruning the kept set with all-ones changes nothing
    SparseAttributeGrid again = apply_prune(half, std::vector<uint8_t>(half.size(), 1));
    CHECK(again.coords() == half.coords());

    CHECK_THROWS(apply_prune(g, {1, 0}));
}

TEST_CASE("threshold: sigma > 0.5 keeps, ties keep") {
    CHECK(threshold_logits({-1.0, -1e-9, 0.0, 1e-9, 3.0}) ==
          std::vector<uint8_t>{0, 0, 1, 1, 1});
}
