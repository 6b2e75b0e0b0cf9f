#pragma once

// World-locked rendering of a dot-grid scene through the calibrated display
// and see-through models: a direct per-pixel ray-traced path and a two-phase
// path that rasterizes an intermediate image and warps it onto the panel.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmdcal/display_model.hpp"
#include "hmdcal/optics.hpp"
#include "hmdcal/scene.hpp"
#include "hmdcal/seethru_model.hpp"

namespace hmdcal {

/// Grayscale image in [0, 1] with a validity mask. Invalid pixels hold 0.
struct DisplayImage {
    int width = 0;
    int height = 0;
    std::vector<double> value;
    std::vector<std::uint8_t> valid;

    DisplayImage() = default;
    DisplayImage(int w, int h);

    std::size_t index(int col, int row) const { return static_cast<std::size_t>(row) * width + col; }
    double at(int col, int row) const { return value[index(col, row)]; }
    bool is_valid(int col, int row) const { return valid[index(col, row)] != 0; }

    friend bool operator==(const DisplayImage& a, const DisplayImage& b) = default;
};

/// Pixel coordinates of panel pixel (col, row), origin at the panel center.
Vec2 panel_pixel_coords(const PanelMeta& panel, double col, double row);

struct RenderOptions {
    int workers = 1;
    bool warm_start = true;  ///< chain lifts along each row
    LiftOptions lift;
};

/// World point on scene_plane shown at p_pixel for an eye at p_view, or empty
/// when the pixel lies outside either model's sampled region or a lift fails.
std::optional<Vec3> pixel_world_point(const DisplayModel& dm, const SeethruModel& sm, const Vec2& p_pixel,
                                      const Vec3& p_view, const ChartedPlane& scene_plane, LiftState& state,
                                      const LiftOptions& opts = {});

/// Per-pixel ray-traced render, panel-sized. Rows are distributed over
/// opts.workers threads; every row starts from a cold lift so the output
/// does not depend on the worker count.
DisplayImage render_raytraced(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                              const DotGridScene& scene, const RenderOptions& opts = {});

/// Single-threaded raster-order render sharing one warm-start state.
DisplayImage render_raytraced(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                              const DotGridScene& scene, LiftState& state, const LiftOptions& opts = {});

/// Straight-line pinhole image of the scene from raster_cam.
DisplayImage render_intermediate(const PinholeCamera& raster_cam, const DotGridScene& scene);

/// Display pixel -> intermediate image pixel mapping sampled every stride
/// panel pixels.
struct WarpGrid {
    int stride = 1;
    int nodes_u = 0;
    int nodes_v = 0;
    int panel_width = 0;
    int panel_height = 0;
    std::vector<Vec2> target;  ///< intermediate px per node, row major
    std::vector<std::uint8_t> valid;

    std::size_t index(int iu, int iv) const { return static_cast<std::size_t>(iv) * nodes_u + iu; }
};

/// Nodes sit at panel pixels (k * stride) up to and including the last row
/// and column. Nodes whose world point is missing or behind raster_cam are
/// masked invalid.
WarpGrid compute_warp(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                      const ChartedPlane& scene_plane, const PinholeCamera& raster_cam, int stride,
                      const LiftOptions& opts = {});

/// Bilinear interpolation of the node targets, nearest-pixel lookup into the
/// intermediate image. A display pixel is valid only if its four nodes and
/// its lookup are.
DisplayImage apply_warp(const WarpGrid& warp, const DisplayImage& intermediate);

/// Binary PGM (P5), 8-bit, value rounded from [0, 1]. A non-empty comment
/// becomes one "# " header line; it must not contain newlines.
std::string pgm_bytes(const DisplayImage& img, const std::string& comment = "");
void write_pgm(const DisplayImage& img, const std::string& path, const std::string& comment = "");

} // namespace hmdcal
