#include "hmdcal/scene.hpp"

#include <random>

#include "hmdcal/error.hpp"

namespace hmdcal {

double DotGridScene::shade(const Vec2& chart) const {
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double r = radius(i);
        if ((chart - centers[i]).squaredNorm() <= r * r) {
            return 1.0;
        }
    }
    return 0.0;
}

void DotGridScene::validate() const {
    if (centers.size() != large.size() || centers.empty()) {
        fail(ErrorCode::InvalidArgument, "DotGridScene: need one size class per dot and at least one dot");
    }
    if (!(large_radius > 0.0) || !(small_radius > 0.0)) {
        fail(ErrorCode::InvalidArgument, "DotGridScene: radii must be positive");
    }
    for (std::size_t i = 0; i < centers.size(); ++i) {
        if (!centers[i].allFinite()) {
            fail(ErrorCode::InvalidArgument, "DotGridScene: non-finite dot center");
        }
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            if ((centers[i] - centers[j]).norm() <= radius(i) + radius(j)) {
                fail(ErrorCode::InvalidArgument, "DotGridScene: dots overlap");
            }
        }
    }
}

DotGridScene make_dot_grid(const ChartedPlane& plane, int rows, int cols, double spacing_mm, double large_radius,
                           double small_radius, std::uint64_t seed) {
    if (rows < 1 || cols < 1) {
        fail(ErrorCode::InvalidArgument, "make_dot_grid: need at least one row and column");
    }
    DotGridScene s;
    s.plane = plane;
    s.large_radius = large_radius;
    s.small_radius = small_radius;
    std::mt19937_64 rng(seed);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            s.centers.emplace_back((c - (cols - 1) / 2.0) * spacing_mm, (r - (rows - 1) / 2.0) * spacing_mm);
            s.large.push_back((rng() >> 63) != 0);
        }
    }
    s.validate();
    return s;
}

DotGridScene default_scene() {
    return make_dot_grid(ChartedPlane::at_z(1500.0), 7, 7, 80.0, 20.0, 12.0, 7);
}

} // namespace hmdcal
