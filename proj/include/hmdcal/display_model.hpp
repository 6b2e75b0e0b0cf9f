#pragma once

// Viewpoint-dependent display model built from two intermediate polynomial
// maps sampled on a base plane:
//   forward  (pixel, base point)     -> direction slope
//   backward (base point, direction) -> pixel
// Off-plane viewpoints reach the intermediate maps through a projection
// along the perceived ray: closed form for the backward model, a lifting
// optimization for the forward one.

#include "hmdcal/correspondence.hpp"
#include "hmdcal/lift.hpp"
#include "hmdcal/polyfit.hpp"

namespace hmdcal {

struct PanelMeta {
    double pitch_mm = 0.05;
    int width = 0;
    int height = 0;
};

struct DisplayModel {
    PolyModel fwd;  ///< (pixel.x, pixel.y, base.u, base.v) -> slope (2)
    PolyModel bwd;  ///< (base.u, base.v, slope.x, slope.y) -> pixel (2)
    ChartedPlane base_plane;
    PanelMeta panel;

    /// True when the base point lies inside the sampled base region.
    bool base_in_box(const Vec2& base) const;
};

/// Base point whose fiber through the forward map passes through p_view.
/// Cold start is the orthogonal projection of p_view; a LiftState from the
/// same model warm-starts from its previous solution.
LiftResult lift_display(const DisplayModel& m, const Vec2& p_pixel, const Vec3& p_view, LiftState& state,
                        const LiftOptions& opts = {});

/// Perceived direction of p_pixel from p_view. result, when given, receives
/// the lift details.
UnitDir display_forward(const DisplayModel& m, const Vec2& p_pixel, const Vec3& p_view, LiftState& state,
                        const LiftOptions& opts = {}, LiftResult* result = nullptr);

/// Pixel seen from p_view along v. Throws GrazingRay or WrongSide.
Vec2 display_backward(const DisplayModel& m, const Vec3& p_view, const UnitDir& v);

/// Intermediate forward map evaluated at a base-plane point.
UnitDir display_intermediate_forward(const DisplayModel& m, const Vec2& p_pixel, const Vec2& base);

struct DisplayFit {
    DisplayModel model;
    FitReport fwd_report;
    FitReport bwd_report;
};

/// Fits both intermediate maps on planar samples. Viewpoints must lie on
/// base_plane within 1e-9 mm, otherwise OffPlane.
DisplayFit fit_display(const CorrespondenceSet& data, int degree, const ChartedPlane& base_plane,
                       const PanelMeta& panel, const FitOptions& opts = {});

} // namespace hmdcal
