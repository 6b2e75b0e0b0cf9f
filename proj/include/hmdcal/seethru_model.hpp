#pragma once

// See-through model: an intermediate light-field map from (base point,
// viewing slope) to the ray's crossings of two world planes. The forward
// model projects the viewpoint back onto the base plane along the viewing
// ray; the backward model lifts a (viewpoint, real point) pair onto the base
// plane by optimization.

#include <utility>

#include "hmdcal/correspondence.hpp"
#include "hmdcal/lift.hpp"
#include "hmdcal/polyfit.hpp"

namespace hmdcal {

struct SeethruModel {
    PolyModel fwd;  ///< (base.u, base.v, slope.x, slope.y) -> (plus.u, plus.v, minus.u, minus.v)
    ChartedPlane base_plane;
    std::pair<ChartedPlane, ChartedPlane> world_planes;

    bool base_in_box(const Vec2& base) const;
};

/// Chart points on the two world planes for the ray leaving p_view along v.
std::pair<Vec2, Vec2> seethru_forward(const SeethruModel& m, const Vec3& p_view, const UnitDir& v);

/// Same ray as world points (plus, minus); extrapolated, when given, flags a
/// base point outside the sampled region.
std::pair<Vec3, Vec3> seethru_world_ray(const SeethruModel& m, const Vec3& p_view, const UnitDir& v,
                                        bool* extrapolated = nullptr);

/// Default see-through lift options: 1e-4 mm residual budget.
LiftOptions seethru_lift_defaults();

/// Base point whose modeled world ray passes through p_real given the
/// viewing direction toward p_view. The line parameter is left free. Throws
/// LiftDiverged or DegenerateDirection.
LiftResult lift_seethru(const SeethruModel& m, const Vec3& p_view, const Vec3& p_real, LiftState& state,
                        const LiftOptions& opts = seethru_lift_defaults());

/// Direction under which p_view perceives p_real through the optics.
UnitDir seethru_backward(const SeethruModel& m, const Vec3& p_view, const Vec3& p_real, LiftState& state,
                         const LiftOptions& opts = seethru_lift_defaults(), LiftResult* result = nullptr);

struct SeethruFit {
    SeethruModel model;
    FitReport report;
};

SeethruFit fit_seethru(const CorrespondenceSet& data, int degree, const ChartedPlane& base_plane,
                       const std::pair<ChartedPlane, ChartedPlane>& world_planes, const FitOptions& opts = {});

} // namespace hmdcal
