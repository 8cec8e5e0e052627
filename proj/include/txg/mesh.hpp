#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace txg {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

struct Vec2 {
    double u = 0, v = 0;
};

/// Indexed triangle mesh with optional per-corner UVs.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2> uvs;
    std::vector<std::array<uint32_t, 3>> faces;    // vertex indices
    std::vector<std::array<uint32_t, 3>> face_uvs; // uv indices, empty if no vt

    size_t face_count() const { return faces.size(); }
    bool has_uvs() const { return !face_uvs.empty(); }

    std::array<Vec3, 3> face_vertices(size_t f) const {
        return {vertices[faces[f][0]], vertices[faces[f][1]], vertices[faces[f][2]]};
    }
    std::array<Vec2, 3> face_uv(size_t f) const {
        return {uvs[face_uvs[f][0]], uvs[face_uvs[f][1]], uvs[face_uvs[f][2]]};
    }
    Vec3 face_centroid(size_t f) const {
        auto v = face_vertices(f);
        return (v[0] + v[1] + v[2]) * (1.0 / 3.0);
    }
    double face_area(size_t f) const {
        auto v = face_vertices(f);
        return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
    }
};

/// Wavefront OBJ subset: v, vt, f with v or v/vt indices. Faces with more
/// than three corners are fan-triangulated.
TriangleMesh load_obj(const std::string& path);
void save_obj(const TriangleMesh& mesh, const std::string& path);

} // namespace txg
