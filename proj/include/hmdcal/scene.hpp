#pragma once

// Planar dot-grid target of large and small dots, used both as the render
// scene and as the real-world object in the end-to-end check.

#include <cstdint>
#include <vector>

#include "hmdcal/geometry.hpp"

namespace hmdcal {

struct DotGridScene {
    ChartedPlane plane = ChartedPlane::at_z(1500.0);
    std::vector<Vec2> centers;      ///< chart mm
    std::vector<bool> large;        ///< per dot radius class
    double large_radius = 20.0;
    double small_radius = 12.0;

    double radius(std::size_t i) const { return large[i] ? large_radius : small_radius; }

    /// 1 inside a dot, 0 on the background.
    double shade(const Vec2& chart) const;

    /// Checks matching array sizes, positive radii and non-overlapping dots.
    void validate() const;
};

/// rows x cols grid centered on the plane origin; the size class of each dot
/// is drawn from seed.
DotGridScene make_dot_grid(const ChartedPlane& plane, int rows, int cols, double spacing_mm, double large_radius,
                           double small_radius, std::uint64_t seed);

/// 7 x 7 grid, 80 mm spacing, at 1500 mm.
DotGridScene default_scene();

} // namespace hmdcal
