"""Sparse voxel attribute grids: trilinear querying, UV baking, and
orthographic render supervision, backed by the native core."""

from ._texgrid import (
    ChannelLayout,
    OrthoCamera,
    PositionMap,
    SparseAttributeGrid,
    TextureImage,
    TriangleMesh,
    bake_position_map,
    bake_texture,
    color_layout,
    dilate_texture,
    from_rows,
    load_obj,
    load_texture_png,
    load_txgrid,
    load_txpos,
    render_position_map,
    render_view,
    save_obj,
    save_texture_png,
    save_txgrid,
    save_txpos,
    selftest,
    toy_asset_grid,
    toy_asset_mesh,
    toy_color_grid,
    toy_cube,
    toy_quad,
    toy_sphere,
    voxelize_surface,
)

__all__ = [
    "ChannelLayout",
    "OrthoCamera",
    "PositionMap",
    "SparseAttributeGrid",
    "TextureImage",
    "TriangleMesh",
    "bake_position_map",
    "bake_texture",
    "color_layout",
    "dilate_texture",
    "from_rows",
    "load_obj",
    "load_texture_png",
    "load_txgrid",
    "load_txpos",
    "render_position_map",
    "render_view",
    "save_obj",
    "save_texture_png",
    "save_txgrid",
    "save_txpos",
    "selftest",
    "toy_asset_grid",
    "toy_asset_mesh",
    "toy_color_grid",
    "toy_cube",
    "toy_quad",
    "toy_sphere",
    "voxelize_surface",
]
