#include "txg/mesh.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace txg {

namespace {

// OBJ indices are 1-based; negative indices count from the end.
uint32_t resolve_index(long idx, size_t count, const std::string& what) {
    long r = idx > 0 ? idx - 1 : long(count) + idx;
    if (r < 0 || size_t(r) >= count)
        throw std::runtime_error("OBJ: " + what + " index out of range: " + std::to_string(idx));
    return uint32_t(r);
}

} // namespace

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open OBJ file: " + path);

    TriangleMesh mesh;
    bool any_uv_face = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            ss >> p.x >> p.y >> p.z;
            if (!ss) throw std::runtime_error("OBJ: malformed vertex line: " + line);
            mesh.vertices.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            ss >> t.u >> t.v;
            if (!ss) throw std::runtime_error("OBJ: malformed vt line: " + line);
            mesh.uvs.push_back(t);
        } else if (tag == "f") {
            std::vector<uint32_t> vi, ti;
            std::string corner;
            while (ss >> corner) {
                size_t slash = corner.find('/');
                long v = std::stol(corner.substr(0, slash));
                vi.push_back(resolve_index(v, mesh.vertices.size(), "vertex"));
                if (slash != std::string::npos) {
                    std::string rest = corner.substr(slash + 1);
                    size_t slash2 = rest.find('/');
                    std::string vt = rest.substr(0, slash2);
                    if (!vt.empty()) {
                        ti.push_back(resolve_index(std::stol(vt), mesh.uvs.size(), "uv"));
                    }
                }
            }
            if (vi.size() < 3) throw std::runtime_error("OBJ: face with fewer than 3 corners");
            bool face_has_uv = ti.size() == vi.size();
            if (face_has_uv) any_uv_face = true;
            for (size_t k = 2; k < vi.size(); ++k) {
                mesh.faces.push_back({vi[0], vi[k - 1], vi[k]});
                if (face_has_uv)
                    mesh.face_uvs.push_back({ti[0], ti[k - 1], ti[k]});
                else if (any_uv_face)
                    throw std::runtime_error("OBJ: mixed faces with and without vt indices");
            }
        }
        // other tags (vn, o, g, usemtl, s, mtllib) ignored
    }
    if (mesh.faces.empty()) throw std::runtime_error("OBJ: no faces in " + path);
    if (!mesh.face_uvs.empty() && mesh.face_uvs.size() != mesh.faces.size())
        throw std::runtime_error("OBJ: mixed faces with and without vt indices");
    return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write OBJ file: " + path);
    out.precision(10);
    for (const auto& p : mesh.vertices) out << "v " << p.x << " " << p.y << " " << p.z << "\n";
    for (const auto& t : mesh.uvs) out << "vt " << t.u << " " << t.v << "\n";
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        out << "f";
        for (int c = 0; c < 3; ++c) {
            out << " " << mesh.faces[f][c] + 1;
            if (mesh.has_uvs()) out << "/" << mesh.face_uvs[f][c] + 1;
        }
        out << "\n";
    }
}

} // namespace txg
