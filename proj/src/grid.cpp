#include "txg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace txg {

std::pair<uint32_t, uint32_t> ChannelLayout::span(const std::string& name) const {
    if (name == "all") return {0, total()};
    if (name == "color") {
        if (k_color == 0) throw std::runtime_error("layout has no color span");
        return {0, k_color};
    }
    if (name == "semantic") {
        if (k_semantic == 0) throw std::runtime_error("layout has no semantic span");
        return {k_color, k_semantic};
    }
    if (name == "pbr") {
        if (k_pbr == 0) throw std::runtime_error("layout has no pbr span");
        return {k_color + k_semantic, k_pbr};
    }
    if (name == "extra") {
        if (k_extra == 0) throw std::runtime_error("layout has no extra span");
        return {k_color + k_semantic + k_pbr, k_extra};
    }
    throw std::runtime_error("unknown channel span: " + name);
}

ChannelLayout color_layout(uint32_t k_color) { return ChannelLayout{k_color, 0, 0, 0}; }

SparseAttributeGrid::SparseAttributeGrid(uint32_t resolution, ChannelLayout layout)
    : resolution_(resolution), layout_(layout) {
    if (resolution == 0 || (resolution & (resolution - 1)) != 0)
        throw std::invalid_argument("grid resolution must be a positive power of two");
    if (layout.total() == 0) throw std::invalid_argument("channel layout is empty");
}

void SparseAttributeGrid::check_coord(const VoxelCoord& c) const {
    int32_t r = int32_t(resolution_);
    if (c.ix < 0 || c.iy < 0 || c.iz < 0 || c.ix >= r || c.iy >= r || c.iz >= r)
        throw std::out_of_range("voxel coordinate out of [0,R) bounds");
}

void SparseAttributeGrid::insert(const VoxelCoord& c, const std::vector<float>& a) {
    check_coord(c);
    if (a.size() != channels())
        throw std::invalid_argument("attribute vector length does not match channel layout");
    auto it = std::lower_bound(coords_.begin(), coords_.end(), c);
    size_t i = size_t(it - coords_.begin());
    if (it != coords_.end() && *it == c) {
        std::copy(a.begin(), a.end(), attributes_.begin() + i * channels());
        return;
    }
    coords_.insert(it, c);
    attributes_.insert(attributes_.begin() + i * channels(), a.begin(), a.end());
}

std::optional<size_t> SparseAttributeGrid::find(const VoxelCoord& c) const {
    auto it = std::lower_bound(coords_.begin(), coords_.end(), c);
    if (it != coords_.end() && *it == c) return size_t(it - coords_.begin());
    return std::nullopt;
}

std::array<StencilTap, 8> SparseAttributeGrid::stencil(const QueryPoint& p) const {
    const int32_t r = int32_t(resolution_);
    // attributes live at cell centers: continuous coordinate (p+0.5)*R - 0.5
    double u[3];
    u[0] = (p.x + 0.5) * r - 0.5;
    u[1] = (p.y + 0.5) * r - 0.5;
    u[2] = (p.z + 0.5) * r - 0.5;

    int32_t v0[3];
    double alpha[3];
    for (int d = 0; d < 3; ++d) {
        double f = std::floor(u[d]);
        int32_t i = int32_t(f);
        if (i < 0) {
            i = 0;
            alpha[d] = 0.0;
        } else if (i > r - 2) {
            i = std::max(r - 2, 0);
            alpha[d] = (r >= 2) ? 1.0 : 0.0;
        } else {
            alpha[d] = u[d] - f;
        }
        v0[d] = i;
    }

    std::array<StencilTap, 8> taps;
    for (int corner = 0; corner < 8; ++corner) {
        int bx = (corner >> 2) & 1, by = (corner >> 1) & 1, bz = corner & 1;
        double w = (bx ? alpha[0] : 1.0 - alpha[0]) *
                   (by ? alpha[1] : 1.0 - alpha[1]) *
                   (bz ? alpha[2] : 1.0 - alpha[2]);
        VoxelCoord c{std::min(v0[0] + bx, r - 1), std::min(v0[1] + by, r - 1),
                     std::min(v0[2] + bz, r - 1)};
        auto idx = find(c);
        taps[corner] = StencilTap{idx ? int64_t(*idx) : -1, w};
    }
    return taps;
}

TrilinearSample SparseAttributeGrid::trilinear_query(const QueryPoint& p,
                                                     const TrilinearOptions& opt) const {
    const uint32_t k = channels();
    if (!opt.fill.empty() && opt.fill.size() != k)
        throw std::invalid_argument("fill vector length does not match channel layout");

    auto taps = stencil(p);
    TrilinearSample out;
    std::vector<double> acc(k, 0.0);
    double missing = 0.0;
    for (const auto& t : taps) {
        if (t.row >= 0) {
            const float* a = row(size_t(t.row));
            for (uint32_t c = 0; c < k; ++c) acc[c] += t.weight * a[c];
        } else {
            missing += t.weight;
            if (!opt.fill.empty())
                for (uint32_t c = 0; c < k; ++c) acc[c] += t.weight * opt.fill[c];
        }
    }
    if (opt.renormalize && missing > 0.0 && missing < 1.0) {
        double inv = 1.0 / (1.0 - missing);
        for (uint32_t c = 0; c < k; ++c) acc[c] *= inv;
    }
    out.values = std::move(acc);
    out.missing_mass = missing;
    return out;
}

std::vector<TrilinearSample> SparseAttributeGrid::batch_query(
    const std::vector<QueryPoint>& points, const TrilinearOptions& opt) const {
    std::vector<TrilinearSample> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(trilinear_query(p, opt));
    return out;
}

SparseAttributeGrid SparseAttributeGrid::from_rows(uint32_t resolution, ChannelLayout layout,
                                                   std::vector<VoxelCoord> coords,
                                                   std::vector<float> attributes) {
    SparseAttributeGrid g(resolution, layout);
    const uint32_t k = g.channels();
    if (attributes.size() != coords.size() * size_t(k))
        throw std::invalid_argument("attribute array size mismatch");
    std::vector<size_t> order(coords.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return coords[a] < coords[b]; });
    g.coords_.reserve(coords.size());
    g.attributes_.reserve(attributes.size());
    for (size_t i = 0; i < order.size(); ++i) {
        const VoxelCoord& c = coords[order[i]];
        g.check_coord(c);
        if (i > 0 && g.coords_.back() == c)
            throw std::invalid_argument("duplicate voxel coordinate");
        g.coords_.push_back(c);
        const float* a = attributes.data() + order[i] * k;
        g.attributes_.insert(g.attributes_.end(), a, a + k);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Surface voxelization: separating-axis triangle-box overlap, inclusive at
// touching boundaries so a triangle lying on a shared cell face reports both
// cells.

namespace {

bool axis_separates(const Vec3& a, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                    const Vec3& h) {
    double p0 = a.dot(v0), p1 = a.dot(v1), p2 = a.dot(v2);
    double r = h.x * std::fabs(a.x) + h.y * std::fabs(a.y) + h.z * std::fabs(a.z);
    double mn = std::min({p0, p1, p2}), mx = std::max({p0, p1, p2});
    return mn > r || mx < -r;
}

bool tri_box_overlap(const Vec3& center, const Vec3& half, const Vec3& a, const Vec3& b,
                     const Vec3& c) {
    Vec3 v0 = a - center, v1 = b - center, v2 = c - center;

    // Box axes. Where the triangle has extent, grazing contact with a cell
    // wall does not count (otherwise a surface on a shared cell boundary
    // would claim every wall-touching neighbor); where it is flat, the plane
    // may lie exactly on the wall and both sides count.
    for (int d = 0; d < 3; ++d) {
        double mn = std::min({v0[d], v1[d], v2[d]});
        double mx = std::max({v0[d], v1[d], v2[d]});
        if (mn == mx) {
            if (mn > half[d] || mx < -half[d]) return false;
        } else {
            if (mn >= half[d] || mx <= -half[d]) return false;
        }
    }

    Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;
    const Vec3 axes[9] = {
        {0, -e0.z, e0.y}, {0, -e1.z, e1.y}, {0, -e2.z, e2.y},
        {e0.z, 0, -e0.x}, {e1.z, 0, -e1.x}, {e2.z, 0, -e2.x},
        {-e0.y, e0.x, 0}, {-e1.y, e1.x, 0}, {-e2.y, e2.x, 0}};
    for (const Vec3& ax : axes)
        if (axis_separates(ax, v0, v1, v2, half)) return false;

    Vec3 n = e0.cross(e1);
    double s = n.dot(v0);
    double r = half.x * std::fabs(n.x) + half.y * std::fabs(n.y) + half.z * std::fabs(n.z);
    return !(s > r || s < -r);
}

} // namespace

std::vector<VoxelCoord> voxelize_surface(const TriangleMesh& mesh, uint32_t resolution) {
    if (mesh.faces.empty()) throw std::invalid_argument("voxelize_surface: empty mesh");
    const int32_t r = int32_t(resolution);
    const double cell = 1.0 / resolution;
    const Vec3 half{cell / 2, cell / 2, cell / 2};

    std::set<VoxelCoord> cells;
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        auto v = mesh.face_vertices(f);
        int32_t lo[3], hi[3];
        for (int d = 0; d < 3; ++d) {
            double mn = std::min({v[0][d], v[1][d], v[2][d]});
            double mx = std::max({v[0][d], v[1][d], v[2][d]});
            lo[d] = std::max<int32_t>(0, int32_t(std::floor((mn + 0.5) * r)) - 1);
            hi[d] = std::min<int32_t>(r - 1, int32_t(std::floor((mx + 0.5) * r)) + 1);
        }
        for (int32_t ix = lo[0]; ix <= hi[0]; ++ix)
            for (int32_t iy = lo[1]; iy <= hi[1]; ++iy)
                for (int32_t iz = lo[2]; iz <= hi[2]; ++iz) {
                    VoxelCoord c{ix, iy, iz};
                    if (cells.count(c)) continue;
                    Vec3 center{(ix + 0.5) * cell - 0.5, (iy + 0.5) * cell - 0.5,
                                (iz + 0.5) * cell - 0.5};
                    if (tri_box_overlap(center, half, v[0], v[1], v[2]))
                        cells.insert(c);
                }
    }
    return {cells.begin(), cells.end()};
}

// ---------------------------------------------------------------------------
// TXGRID: "TXG1" | u32 R | u32 k | 4x u32 span counts | u64 M |
//         M x (3x u32 coord, k x f32), coords sorted lexicographically.

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error(std::string("TXGRID: truncated while reading ") + what);
    return v;
}

} // namespace

void save_txgrid(const SparseAttributeGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write("TXG1", 4);
    write_pod(out, grid.resolution());
    write_pod(out, grid.channels());
    write_pod(out, grid.layout().k_color);
    write_pod(out, grid.layout().k_semantic);
    write_pod(out, grid.layout().k_pbr);
    write_pod(out, grid.layout().k_extra);
    write_pod(out, uint64_t(grid.size()));
    const uint32_t k = grid.channels();
    for (size_t i = 0; i < grid.size(); ++i) {
        VoxelCoord c = grid.coord(i);
        write_pod(out, uint32_t(c.ix));
        write_pod(out, uint32_t(c.iy));
        write_pod(out, uint32_t(c.iz));
        out.write(reinterpret_cast<const char*>(grid.row(i)), k * sizeof(float));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

SparseAttributeGrid load_txgrid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TXG1", 4) != 0)
        throw std::runtime_error("TXGRID: bad magic in " + path);
    uint32_t res = read_pod<uint32_t>(in, "resolution");
    uint32_t k = read_pod<uint32_t>(in, "channel count");
    ChannelLayout layout;
    layout.k_color = read_pod<uint32_t>(in, "color span");
    layout.k_semantic = read_pod<uint32_t>(in, "semantic span");
    layout.k_pbr = read_pod<uint32_t>(in, "pbr span");
    layout.k_extra = read_pod<uint32_t>(in, "extra span");
    if (layout.total() != k)
        throw std::runtime_error("TXGRID: span counts do not sum to channel count");
    uint64_t m = read_pod<uint64_t>(in, "entry count");

    SparseAttributeGrid grid(res, layout);
    std::vector<VoxelCoord> coords;
    std::vector<float> attrs;
    coords.reserve(m);
    attrs.reserve(m * k);
    VoxelCoord prev{-1, -1, -1};
    for (uint64_t i = 0; i < m; ++i) {
        uint32_t x = read_pod<uint32_t>(in, "coord");
        uint32_t y = read_pod<uint32_t>(in, "coord");
        uint32_t z = read_pod<uint32_t>(in, "coord");
        if (x >= res || y >= res || z >= res)
            throw std::runtime_error("TXGRID: coordinate out of range");
        VoxelCoord c{int32_t(x), int32_t(y), int32_t(z)};
        if (i > 0 && !(prev < c))
            throw std::runtime_error("TXGRID: coordinates unsorted or duplicated");
        prev = c;
        coords.push_back(c);
        std::vector<float> a(k);
        in.read(reinterpret_cast<char*>(a.data()), k * sizeof(float));
        if (!in) throw std::runtime_error("TXGRID: truncated attribute record");
        attrs.insert(attrs.end(), a.begin(), a.end());
    }
    return SparseAttributeGrid::from_rows(res, layout, std::move(coords), std::move(attrs));
}

} // namespace txg
