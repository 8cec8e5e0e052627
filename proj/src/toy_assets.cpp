#include "txg/toy_assets.hpp"

#include <cmath>
#include <stdexcept>

namespace txg {

TriangleMesh toy_quad(double half) {
    TriangleMesh m;
    m.vertices = {{-half, -half, 0}, {half, -half, 0}, {half, half, 0}, {-half, half, 0}};
    m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    m.face_uvs = m.faces;
    return m;
}

TriangleMesh toy_cube(double half) {
    TriangleMesh m;
    const double h = half;
    // per-face quads on a 3x2 UV atlas; corners duplicated per face
    struct Face {
        Vec3 v[4];
        int cell; // atlas slot 0..5 (col = cell%3, row = cell/3)
    };
    const Face faces[6] = {
        {{{h, -h, -h}, {h, h, -h}, {h, h, h}, {h, -h, h}}, 0},    // +x
        {{{-h, h, -h}, {-h, -h, -h}, {-h, -h, h}, {-h, h, h}}, 1}, // -x
        {{{h, h, -h}, {-h, h, -h}, {-h, h, h}, {h, h, h}}, 2},     // +y
        {{{-h, -h, -h}, {h, -h, -h}, {h, -h, h}, {-h, -h, h}}, 3}, // -y
        {{{-h, -h, h}, {h, -h, h}, {h, h, h}, {-h, h, h}}, 4},     // +z
        {{{h, -h, -h}, {-h, -h, -h}, {-h, h, -h}, {h, h, -h}}, 5}, // -z
    };
    const double inset = 0.02;
    for (const Face& f : faces) {
        uint32_t base = uint32_t(m.vertices.size());
        for (int i = 0; i < 4; ++i) m.vertices.push_back(f.v[i]);
        double u0 = double(f.cell % 3) / 3.0 + inset;
        double u1 = double(f.cell % 3 + 1) / 3.0 - inset;
        double v0 = double(f.cell / 3) / 2.0 + inset;
        double v1 = double(f.cell / 3 + 1) / 2.0 - inset;
        uint32_t ubase = uint32_t(m.uvs.size());
        m.uvs.push_back({u0, v0});
        m.uvs.push_back({u1, v0});
        m.uvs.push_back({u1, v1});
        m.uvs.push_back({u0, v1});
        m.faces.push_back({base, base + 1, base + 2});
        m.faces.push_back({base, base + 2, base + 3});
        m.face_uvs.push_back({ubase, ubase + 1, ubase + 2});
        m.face_uvs.push_back({ubase, ubase + 2, ubase + 3});
    }
    return m;
}

TriangleMesh toy_sphere(double radius, int stacks, int slices) {
    if (stacks < 2 || slices < 3) throw std::invalid_argument("toy_sphere: too few segments");
    TriangleMesh m;
    const double pi = 3.14159265358979323846;
    // (stacks+1) x (slices+1) vertex sheet; the duplicated seam column keeps
    // UVs in [0,1] without wraparound
    for (int i = 0; i <= stacks; ++i) {
        double phi = pi * double(i) / stacks; // 0 at +z pole
        for (int j = 0; j <= slices; ++j) {
            double theta = 2.0 * pi * double(j) / slices;
            m.vertices.push_back({radius * std::sin(phi) * std::cos(theta),
                                  radius * std::sin(phi) * std::sin(theta),
                                  radius * std::cos(phi)});
            m.uvs.push_back({double(j) / slices, 1.0 - double(i) / stacks});
        }
    }
    auto idx = [&](int i, int j) { return uint32_t(i * (slices + 1) + j); };
    for (int i = 0; i < stacks; ++i) {
        for (int j = 0; j < slices; ++j) {
            uint32_t a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
            if (i > 0) {
                m.faces.push_back({a, b, c});
                m.face_uvs.push_back({a, b, c});
            }
            if (i < stacks - 1) {
                m.faces.push_back({a, c, d});
                m.face_uvs.push_back({a, c, d});
            }
        }
    }
    return m;
}

SparseAttributeGrid make_attribute_grid(const TriangleMesh& mesh, uint32_t resolution,
                                        ChannelLayout layout, const AttributeFn& fn) {
    std::vector<VoxelCoord> coords = voxelize_surface(mesh, resolution);
    std::vector<float> attrs;
    attrs.reserve(coords.size() * layout.total());
    for (const auto& c : coords) {
        Vec3 center{(c.ix + 0.5) / double(resolution) - 0.5,
                    (c.iy + 0.5) / double(resolution) - 0.5,
                    (c.iz + 0.5) / double(resolution) - 0.5};
        std::vector<float> a = fn(center);
        if (a.size() != layout.total())
            throw std::invalid_argument("make_attribute_grid: attribute width mismatch");
        attrs.insert(attrs.end(), a.begin(), a.end());
    }
    return SparseAttributeGrid::from_rows(resolution, layout, std::move(coords),
                                          std::move(attrs));
}

SparseAttributeGrid toy_color_grid(const TriangleMesh& mesh, uint32_t resolution) {
    return make_attribute_grid(mesh, resolution, color_layout(3), [](const Vec3& p) {
        auto wave = [](double v) { return float(0.5 + 0.5 * std::sin(v)); };
        return std::vector<float>{wave(8.0 * p.x), wave(8.0 * p.y + 1.0), wave(8.0 * p.z + 2.0)};
    });
}

TriangleMesh toy_asset_mesh(int index) {
    switch (index % 5) {
        case 0: return toy_sphere(0.18);
        case 1: return toy_cube(0.22);
        case 2: return toy_sphere(0.26);
        case 3: return toy_cube(0.3);
        default: return toy_sphere(0.32, 10, 20);
    }
}

SparseAttributeGrid toy_asset_grid(int index, uint32_t resolution) {
    double phase = 1.7 * index;
    return make_attribute_grid(toy_asset_mesh(index), resolution, color_layout(3),
                               [phase](const Vec3& p) {
                                   auto wave = [](double v) {
                                       return float(0.5 + 0.5 * std::sin(v));
                                   };
                                   return std::vector<float>{wave(7.0 * p.x + phase),
                                                             wave(7.0 * p.y + 2.0 * phase),
                                                             wave(7.0 * p.z + 3.0 * phase)};
                               });
}

SparseAttributeGrid toy_label_grid(const TriangleMesh& mesh, uint32_t resolution,
                                   const std::array<float, 3>& color_neg,
                                   const std::array<float, 3>& color_pos) {
    ChannelLayout layout;
    layout.k_color = 3;
    layout.k_semantic = 3;
    return make_attribute_grid(mesh, resolution, layout, [&](const Vec3& p) {
        const auto& label = p.x < 0 ? color_neg : color_pos;
        return std::vector<float>{0.5f, 0.5f, 0.5f, label[0], label[1], label[2]};
    });
}

} // namespace txg
