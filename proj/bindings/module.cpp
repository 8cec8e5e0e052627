// Python bindings: a thin numpy-friendly layer over the native core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "txg/grid.hpp"
#include "txg/image.hpp"
#include "txg/mesh.hpp"
#include "txg/renderer.hpp"
#include "txg/selftest.hpp"
#include "txg/toy_assets.hpp"
#include "txg/uv_baker.hpp"

namespace py = pybind11;
using namespace txg;

namespace {

py::array_t<int32_t> coords_array(const std::vector<VoxelCoord>& coords) {
    py::array_t<int32_t> out({py::ssize_t(coords.size()), py::ssize_t(3)});
    auto a = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        a(i, 0) = coords[size_t(i)].ix;
        a(i, 1) = coords[size_t(i)].iy;
        a(i, 2) = coords[size_t(i)].iz;
    }
    return out;
}

py::array_t<float> texture_array(const TextureImage& img) {
    py::array_t<float> out(
        {py::ssize_t(img.height), py::ssize_t(img.width), py::ssize_t(img.channels)});
    std::copy(img.values.begin(), img.values.end(), out.mutable_data());
    return out;
}

py::array_t<double> positions_array(const PositionMap& pm) {
    py::array_t<double> out({py::ssize_t(pm.height), py::ssize_t(pm.width), py::ssize_t(3)});
    auto a = out.mutable_unchecked<3>();
    for (py::ssize_t y = 0; y < a.shape(0); ++y)
        for (py::ssize_t x = 0; x < a.shape(1); ++x) {
            const Vec3& p = pm.positions[pm.texel(uint32_t(x), uint32_t(y))];
            a(y, x, 0) = p.x;
            a(y, x, 1) = p.y;
            a(y, x, 2) = p.z;
        }
    return out;
}

py::array_t<uint8_t> valid_array(const std::vector<uint8_t>& valid, uint32_t w, uint32_t h) {
    py::array_t<uint8_t> out({py::ssize_t(h), py::ssize_t(w)});
    std::copy(valid.begin(), valid.end(), out.mutable_data());
    return out;
}

} // namespace

PYBIND11_MODULE(_texgrid, m) {
    m.doc() = "Sparse voxel attribute grids with UV baking and render supervision";

    py::class_<ChannelLayout>(m, "ChannelLayout")
        .def(py::init([](uint32_t c, uint32_t s, uint32_t p, uint32_t e) {
                 return ChannelLayout{c, s, p, e};
             }),
             py::arg("k_color") = 0, py::arg("k_semantic") = 0, py::arg("k_pbr") = 0,
             py::arg("k_extra") = 0)
        .def_readwrite("k_color", &ChannelLayout::k_color)
        .def_readwrite("k_semantic", &ChannelLayout::k_semantic)
        .def_readwrite("k_pbr", &ChannelLayout::k_pbr)
        .def_readwrite("k_extra", &ChannelLayout::k_extra)
        .def("total", &ChannelLayout::total)
        .def("span", &ChannelLayout::span);

    m.def("color_layout", &color_layout, py::arg("k_color") = 3);

    py::class_<TriangleMesh>(m, "TriangleMesh")
        .def(py::init<>())
        .def_property_readonly("face_count", &TriangleMesh::face_count)
        .def_property_readonly("has_uvs", &TriangleMesh::has_uvs)
        .def_property_readonly("vertices",
                               [](const TriangleMesh& mesh) {
                                   py::array_t<double> out(
                                       {py::ssize_t(mesh.vertices.size()), py::ssize_t(3)});
                                   auto a = out.mutable_unchecked<2>();
                                   for (py::ssize_t i = 0; i < a.shape(0); ++i) {
                                       a(i, 0) = mesh.vertices[size_t(i)].x;
                                       a(i, 1) = mesh.vertices[size_t(i)].y;
                                       a(i, 2) = mesh.vertices[size_t(i)].z;
                                   }
                                   return out;
                               })
        .def_property_readonly("faces", [](const TriangleMesh& mesh) {
            py::array_t<uint32_t> out({py::ssize_t(mesh.faces.size()), py::ssize_t(3)});
            auto a = out.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < a.shape(0); ++i)
                for (py::ssize_t j = 0; j < 3; ++j)
                    a(i, j) = mesh.faces[size_t(i)][size_t(j)];
            return out;
        });

    m.def("load_obj", &load_obj, py::arg("path"));
    m.def("save_obj", &save_obj, py::arg("mesh"), py::arg("path"));

    py::class_<SparseAttributeGrid>(m, "SparseAttributeGrid")
        .def(py::init<uint32_t, ChannelLayout>(), py::arg("resolution"), py::arg("layout"))
        .def_property_readonly("resolution", &SparseAttributeGrid::resolution)
        .def_property_readonly("channels", &SparseAttributeGrid::channels)
        .def_property_readonly("layout", &SparseAttributeGrid::layout)
        .def("__len__", &SparseAttributeGrid::size)
        .def("insert",
             [](SparseAttributeGrid& g, std::array<int32_t, 3> c, std::vector<float> a) {
                 g.insert(VoxelCoord{c[0], c[1], c[2]}, a);
             },
             py::arg("coord"), py::arg("attributes"))
        .def("coords", [](const SparseAttributeGrid& g) { return coords_array(g.coords()); })
        .def("attributes",
             [](const SparseAttributeGrid& g) {
                 py::array_t<float> out(
                     {py::ssize_t(g.size()), py::ssize_t(g.channels())});
                 std::copy(g.attributes().begin(), g.attributes().end(), out.mutable_data());
                 return out;
             })
        .def("query",
             [](const SparseAttributeGrid& g, double x, double y, double z, bool renormalize) {
                 TrilinearOptions opt;
                 opt.renormalize = renormalize;
                 auto s = g.trilinear_query(QueryPoint{x, y, z}, opt);
                 return py::make_tuple(s.values, s.missing_mass);
             },
             py::arg("x"), py::arg("y"), py::arg("z"), py::arg("renormalize") = false,
             "Trilinear sample at a point in [-0.5, 0.5]^3; returns (values, missing_mass)");

    m.def("from_rows",
          [](uint32_t resolution, ChannelLayout layout, py::array_t<int32_t> coords,
             py::array_t<float> attributes) {
              auto c = coords.unchecked<2>();
              if (c.shape(1) != 3) throw std::invalid_argument("coords must be (N, 3)");
              std::vector<VoxelCoord> vc(size_t(c.shape(0)));
              for (py::ssize_t i = 0; i < c.shape(0); ++i)
                  vc[size_t(i)] = {c(i, 0), c(i, 1), c(i, 2)};
              auto a = attributes.unchecked<2>();
              std::vector<float> va(size_t(a.shape(0) * a.shape(1)));
              for (py::ssize_t i = 0; i < a.shape(0); ++i)
                  for (py::ssize_t j = 0; j < a.shape(1); ++j)
                      va[size_t(i * a.shape(1) + j)] = a(i, j);
              return SparseAttributeGrid::from_rows(resolution, layout, std::move(vc),
                                                    std::move(va));
          },
          py::arg("resolution"), py::arg("layout"), py::arg("coords"), py::arg("attributes"));

    m.def("voxelize_surface",
          [](const TriangleMesh& mesh, uint32_t resolution) {
              return coords_array(voxelize_surface(mesh, resolution));
          },
          py::arg("mesh"), py::arg("resolution"));

    py::class_<PositionMap>(m, "PositionMap")
        .def_property_readonly("width", [](const PositionMap& pm) { return pm.width; })
        .def_property_readonly("height", [](const PositionMap& pm) { return pm.height; })
        .def("positions", &positions_array)
        .def("valid",
             [](const PositionMap& pm) { return valid_array(pm.valid, pm.width, pm.height); });

    py::class_<TextureImage>(m, "TextureImage")
        .def_property_readonly("width", [](const TextureImage& t) { return t.width; })
        .def_property_readonly("height", [](const TextureImage& t) { return t.height; })
        .def_property_readonly("channels", [](const TextureImage& t) { return t.channels; })
        .def("values", &texture_array)
        .def("valid",
             [](const TextureImage& t) { return valid_array(t.valid, t.width, t.height); });

    py::class_<OrthoCamera>(m, "OrthoCamera")
        .def_static("axis", &OrthoCamera::axis, py::arg("name"), py::arg("width"),
                    py::arg("height"));

    m.def("bake_position_map",
          [](const TriangleMesh& mesh, uint32_t width, uint32_t height) {
              return bake_position_map(mesh, width, height);
          },
          py::arg("mesh"), py::arg("width"), py::arg("height"));
    m.def("bake_texture",
          [](const SparseAttributeGrid& grid, const PositionMap& posmap,
             const std::string& span) { return bake_texture(grid, posmap, span); },
          py::arg("grid"), py::arg("posmap"), py::arg("span") = "color");
    m.def("dilate_texture", &dilate_texture, py::arg("image"), py::arg("iterations"));
    m.def("render_position_map", &render_position_map, py::arg("mesh"), py::arg("camera"));
    m.def("render_view",
          [](const SparseAttributeGrid& grid, const PositionMap& vpm, const std::string& span) {
              return render_view(grid, vpm, span);
          },
          py::arg("grid"), py::arg("view_posmap"), py::arg("span") = "color");

    m.def("save_txgrid", &save_txgrid, py::arg("grid"), py::arg("path"));
    m.def("load_txgrid", &load_txgrid, py::arg("path"));
    m.def("save_txpos", &save_txpos, py::arg("posmap"), py::arg("path"));
    m.def("load_txpos", &load_txpos, py::arg("path"));
    m.def("save_texture_png", &save_texture_png, py::arg("image"), py::arg("path"),
          py::arg("with_alpha") = false);
    m.def("load_texture_png", &load_texture_png, py::arg("path"));

    m.def("toy_quad", &toy_quad, py::arg("half") = 0.4);
    m.def("toy_cube", &toy_cube, py::arg("half") = 0.3);
    m.def("toy_sphere", &toy_sphere, py::arg("radius") = 0.2, py::arg("stacks") = 12,
          py::arg("slices") = 24);
    m.def("toy_color_grid", &toy_color_grid, py::arg("mesh"), py::arg("resolution"));
    m.def("toy_asset_mesh", &toy_asset_mesh, py::arg("index"));
    m.def("toy_asset_grid", &toy_asset_grid, py::arg("index"), py::arg("resolution"));

    m.def("selftest", []() {
        std::ostringstream out;
        int failures = run_selftest(out);
        return py::make_tuple(failures, out.str());
    });
}
