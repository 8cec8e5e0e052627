#pragma once

#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/mesh.hpp"

namespace txg {

/// Orthographic camera looking along `dir` with a square film plane of side
/// `footprint` centered on the origin. The default footprint covers the unit
/// cube for any direction.
struct OrthoCamera {
    Vec3 dir{0, 0, -1}; // unit vector, from camera into the scene
    Vec3 right{1, 0, 0};
    Vec3 up{0, 1, 0};
    uint32_t width = 0, height = 0;
    double footprint = 1.0;

    /// Canonical axis views: "+x" "-x" "+y" "-y" "+z" "-z". The camera sits
    /// on the named side looking at the origin; footprint exactly covers the
    /// facing cube face.
    static OrthoCamera axis(const std::string& name, uint32_t width, uint32_t height);

    /// Arbitrary direction; basis derived deterministically, footprint
    /// sqrt(3) to contain any cube orientation.
    static OrthoCamera from_direction(const Vec3& dir, uint32_t width, uint32_t height);

    /// World position of pixel (x, y) on the film plane (pixel centers).
    Vec3 pixel_origin(uint32_t x, uint32_t y) const;
};

/// The six canonical axis views, the default supervision set.
std::vector<OrthoCamera> default_view_set(uint32_t width, uint32_t height);

/// Per pixel, nearest mesh intersection along the orthographic ray; misses
/// are invalid; equal-depth ties go to the smaller triangle index.
PositionMap render_position_map(const TriangleMesh& mesh, const OrthoCamera& cam);

/// Same contract as bake_texture, driven by a view position map.
TextureImage render_view(const SparseAttributeGrid& grid, const PositionMap& vpm,
                         const std::string& span = "color",
                         const TrilinearOptions& opt = {});

/// Moller-Trumbore; returns ray parameter or nullopt.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c);

} // namespace txg
