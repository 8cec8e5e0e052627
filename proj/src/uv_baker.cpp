#include "txg/uv_baker.hpp"

#include <cmath>
#include <stdexcept>

namespace txg {

namespace {

double edge_fn(const Vec2& p0, const Vec2& p1, double u, double v) {
    return (p1.u - p0.u) * (v - p0.v) - (p1.v - p0.v) * (u - p0.u);
}

// Boundary texels belong to exactly one of two triangles sharing an edge:
// accept a zero edge function only on edges heading down, or horizontal
// edges heading right (v-up analogue of the top-left rule).
bool edge_accepts(double w, const Vec2& from, const Vec2& to, double sign) {
    if (w > 0) return true;
    if (w < 0) return false;
    double du = (to.u - from.u) * sign;
    double dv = (to.v - from.v) * sign;
    return dv < 0 || (dv == 0 && du > 0);
}

} // namespace

PositionMap bake_position_map(const TriangleMesh& mesh, uint32_t width, uint32_t height,
                              BakeStats* stats, std::vector<int32_t>* face_ids) {
    if (!mesh.has_uvs()) throw std::invalid_argument("bake_position_map: mesh has no UVs");
    if (width == 0 || height == 0)
        throw std::invalid_argument("bake_position_map: zero texture size");
    for (const auto& t : mesh.uvs)
        if (t.u < 0 || t.u > 1 || t.v < 0 || t.v > 1)
            throw std::invalid_argument("bake_position_map: UV outside [0,1]^2");

    PositionMap pm(width, height);
    if (face_ids) face_ids->assign(size_t(width) * height, -1);
    BakeStats local;
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        auto uv = mesh.face_uv(f);
        auto p3 = mesh.face_vertices(f);
        double area2 = edge_fn(uv[0], uv[1], uv[2].u, uv[2].v);
        if (area2 == 0) {
            ++local.degenerate_triangles;
            continue;
        }
        double sign = area2 > 0 ? 1.0 : -1.0;
        double inv_area = 1.0 / std::fabs(area2);

        double umin = std::min({uv[0].u, uv[1].u, uv[2].u});
        double umax = std::max({uv[0].u, uv[1].u, uv[2].u});
        double vmin = std::min({uv[0].v, uv[1].v, uv[2].v});
        double vmax = std::max({uv[0].v, uv[1].v, uv[2].v});
        int x0 = std::max(0, int(std::floor(umin * width - 0.5)));
        int x1 = std::min(int(width) - 1, int(std::ceil(umax * width - 0.5)));
        int y0 = std::max(0, int(std::floor(vmin * height - 0.5)));
        int y1 = std::min(int(height) - 1, int(std::ceil(vmax * height - 0.5)));

        for (int y = y0; y <= y1; ++y) {
            double tv = (y + 0.5) / height;
            for (int x = x0; x <= x1; ++x) {
                double tu = (x + 0.5) / width;
                double w0 = sign * edge_fn(uv[1], uv[2], tu, tv);
                double w1 = sign * edge_fn(uv[2], uv[0], tu, tv);
                double w2 = sign * edge_fn(uv[0], uv[1], tu, tv);
                if (!edge_accepts(w0, uv[1], uv[2], sign)) continue;
                if (!edge_accepts(w1, uv[2], uv[0], sign)) continue;
                if (!edge_accepts(w2, uv[0], uv[1], sign)) continue;
                double l0 = w0 * inv_area, l1 = w1 * inv_area, l2 = w2 * inv_area;
                size_t t = pm.texel(uint32_t(x), uint32_t(y));
                pm.positions[t] = p3[0] * l0 + p3[1] * l1 + p3[2] * l2;
                pm.valid[t] = 1;
                if (face_ids) (*face_ids)[t] = int32_t(f);
            }
        }
    }
    if (stats) *stats = local;
    return pm;
}

TextureImage bake_texture(const SparseAttributeGrid& grid, const PositionMap& posmap,
                          const std::string& span, const TrilinearOptions& opt) {
    auto [offset, count] = grid.layout().span(span);
    TextureImage img(posmap.width, posmap.height, count);
    img.missing_mass.assign(size_t(posmap.width) * posmap.height, 0.0f);
    for (uint32_t y = 0; y < posmap.height; ++y) {
        for (uint32_t x = 0; x < posmap.width; ++x) {
            size_t t = posmap.texel(x, y);
            if (!posmap.valid[t]) continue;
            const Vec3& p = posmap.positions[t];
            auto s = grid.trilinear_query(QueryPoint{p.x, p.y, p.z}, opt);
            float* dst = img.at(x, y);
            for (uint32_t c = 0; c < count; ++c) dst[c] = float(s.values[offset + c]);
            img.valid[t] = 1;
            img.missing_mass[t] = float(s.missing_mass);
        }
    }
    return img;
}

TextureImage dilate_texture(const TextureImage& img, uint32_t iterations) {
    TextureImage cur = img;
    for (uint32_t it = 0; it < iterations; ++it) {
        TextureImage next = cur;
        for (uint32_t y = 0; y < cur.height; ++y) {
            for (uint32_t x = 0; x < cur.width; ++x) {
                size_t t = cur.texel(x, y);
                if (cur.valid[t]) continue;
                std::vector<double> acc(cur.channels, 0.0);
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = int(x) + dx, ny = int(y) + dy;
                        if (nx < 0 || ny < 0 || nx >= int(cur.width) || ny >= int(cur.height))
                            continue;
                        size_t nt = cur.texel(uint32_t(nx), uint32_t(ny));
                        if (!cur.valid[nt]) continue;
                        const float* src = cur.at(uint32_t(nx), uint32_t(ny));
                        for (uint32_t c = 0; c < cur.channels; ++c) acc[c] += src[c];
                        ++n;
                    }
                }
                if (n > 0) {
                    float* dst = next.at(x, y);
                    for (uint32_t c = 0; c < cur.channels; ++c)
                        dst[c] = float(acc[c] / n);
                    next.valid[t] = 1;
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

} // namespace txg
