#include "txg/renderer.hpp"

#include "txg/uv_baker.hpp"

#include <cmath>
#include <stdexcept>

namespace txg {

OrthoCamera OrthoCamera::axis(const std::string& name, uint32_t width, uint32_t height) {
    OrthoCamera cam;
    cam.width = width;
    cam.height = height;
    cam.footprint = 1.0;
    if (name == "+z") {
        cam.dir = {0, 0, -1}; cam.right = {1, 0, 0}; cam.up = {0, 1, 0};
    } else if (name == "-z") {
        cam.dir = {0, 0, 1}; cam.right = {-1, 0, 0}; cam.up = {0, 1, 0};
    } else if (name == "+x") {
        cam.dir = {-1, 0, 0}; cam.right = {0, 0, -1}; cam.up = {0, 1, 0};
    } else if (name == "-x") {
        cam.dir = {1, 0, 0}; cam.right = {0, 0, 1}; cam.up = {0, 1, 0};
    } else if (name == "+y") {
        cam.dir = {0, -1, 0}; cam.right = {1, 0, 0}; cam.up = {0, 0, -1};
    } else if (name == "-y") {
        cam.dir = {0, 1, 0}; cam.right = {1, 0, 0}; cam.up = {0, 0, 1};
    } else {
        throw std::invalid_argument("unknown axis view: " + name);
    }
    return cam;
}

OrthoCamera OrthoCamera::from_direction(const Vec3& dir, uint32_t width, uint32_t height) {
    double n = dir.norm();
    if (n == 0) throw std::invalid_argument("zero view direction");
    OrthoCamera cam;
    cam.dir = dir * (1.0 / n);
    Vec3 up0 = std::fabs(cam.dir.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{0, 1, 0};
    cam.right = cam.dir.cross(up0).normalized();
    cam.up = cam.right.cross(cam.dir);
    cam.width = width;
    cam.height = height;
    cam.footprint = std::sqrt(3.0);
    return cam;
}

Vec3 OrthoCamera::pixel_origin(uint32_t x, uint32_t y) const {
    double s = ((x + 0.5) / width - 0.5) * footprint;
    double t = ((y + 0.5) / height - 0.5) * footprint;
    return dir * -1.0 + right * s + up * t;
}

std::vector<OrthoCamera> default_view_set(uint32_t width, uint32_t height) {
    std::vector<OrthoCamera> views;
    for (const char* name : {"+x", "-x", "+y", "-y", "+z", "-z"})
        views.push_back(OrthoCamera::axis(name, width, height));
    return views;
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c) {
    const double eps = 1e-12;
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pvec = dir.cross(e2);
    double det = e1.dot(pvec);
    if (std::fabs(det) < eps) return std::nullopt;
    double inv_det = 1.0 / det;
    Vec3 tvec = origin - a;
    double u = tvec.dot(pvec) * inv_det;
    if (u < -eps || u > 1 + eps) return std::nullopt;
    Vec3 qvec = tvec.cross(e1);
    double v = dir.dot(qvec) * inv_det;
    if (v < -eps || u + v > 1 + eps) return std::nullopt;
    double t = e2.dot(qvec) * inv_det;
    if (t < 0) return std::nullopt;
    return t;
}

PositionMap render_position_map(const TriangleMesh& mesh, const OrthoCamera& cam) {
    if (mesh.faces.empty()) throw std::invalid_argument("render_position_map: empty mesh");
    PositionMap pm(cam.width, cam.height);
    for (uint32_t y = 0; y < cam.height; ++y) {
        for (uint32_t x = 0; x < cam.width; ++x) {
            Vec3 origin = cam.pixel_origin(x, y);
            double best = std::numeric_limits<double>::infinity();
            bool hit = false;
            for (size_t f = 0; f < mesh.face_count(); ++f) {
                auto v = mesh.face_vertices(f);
                auto t = ray_triangle(origin, cam.dir, v[0], v[1], v[2]);
                if (t && *t < best) { // strict: equal depth keeps earlier face
                    best = *t;
                    hit = true;
                }
            }
            if (hit) {
                size_t idx = pm.texel(x, y);
                pm.positions[idx] = origin + cam.dir * best;
                pm.valid[idx] = 1;
            }
        }
    }
    return pm;
}

TextureImage render_view(const SparseAttributeGrid& grid, const PositionMap& vpm,
                         const std::string& span, const TrilinearOptions& opt) {
    return bake_texture(grid, vpm, span, opt);
}

} // namespace txg
