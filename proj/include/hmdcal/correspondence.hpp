#pragma once

// Calibration samples and the sampling/noise settings that produced them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmdcal/geometry.hpp"
#include "hmdcal/optics.hpp"

namespace hmdcal {

enum class SamplingMode { Planar, Volumetric };

struct SamplingSpec {
    SamplingMode mode = SamplingMode::Planar;
    /// Planar: viewpoints on a chart grid of this plane.
    ChartedPlane base_plane = ChartedPlane::at_z(2.0);
    int n_u = 9;
    int n_v = 9;
    Vec2 u_range = Vec2(-4.0, 4.0);  ///< chart (Planar) or device x (Volumetric), mm
    Vec2 v_range = Vec2(-4.0, 4.0);
    /// Volumetric only: device z levels. A degree-d fit needs n_z > d.
    int n_z = 5;
    Vec2 z_range = Vec2(2.0, 10.0);
    /// Camera intrinsics; position is replaced per viewpoint.
    PinholeCamera camera = PinholeCamera::forward_looking(Vec3::Zero(), 1000.0, 601, 601);
    int n_px_u = 15;
    int n_px_v = 15;

    /// Checks grid counts >= 2 and ordered ranges.
    void validate() const;
    std::vector<Vec3> viewpoints() const;
    std::vector<Vec2> camera_pixels() const;
};

struct NoiseSpec {
    double sigma_px = 0.0;
    std::uint64_t seed = 1;
};

struct DisplaySample {
    Vec3 p_view = Vec3::Zero();
    Vec2 p_pixel = Vec2::Zero();
    UnitDir v;
};

struct SeethruSample {
    Vec3 p_view = Vec3::Zero();
    UnitDir v;
    Vec2 p_plus = Vec2::Zero();
    Vec2 p_minus = Vec2::Zero();
};

struct Provenance {
    SamplingSpec sampling;
    NoiseSpec noise;
    std::string system_id;
    int dropped = 0;
    /// Geometry the models need later: panel for display sets, world planes
    /// for see-through sets.
    std::optional<Panel> panel;
    std::optional<std::pair<ChartedPlane, ChartedPlane>> world_planes;
};

struct CorrespondenceSet {
    SystemKind kind = SystemKind::Display;
    std::vector<DisplaySample> display;
    std::vector<SeethruSample> seethru;
    Provenance provenance;

    std::size_t size() const { return kind == SystemKind::Display ? display.size() : seethru.size(); }
};

} // namespace hmdcal
