#pragma once

// Simulated calibration data collection. The eyeball camera visits a grid of
// viewpoints; camera pixel noise is injected before ray formation.

#include "hmdcal/correspondence.hpp"
#include "hmdcal/optics.hpp"
#include "hmdcal/polyfit.hpp"

namespace hmdcal {

/// Planar display calibration: for every viewpoint and camera grid pixel the
/// recorded direction comes from the perturbed pixel while the panel pixel is
/// traced from the unperturbed one. Rays that do not reach the panel are
/// dropped; more than half dropped throws TooManyDropped.
CorrespondenceSet collect_display(const OpticalSystem& sys, const SamplingSpec& spec, const NoiseSpec& noise);

/// Volumetric baseline: same as collect_display over a 3D viewpoint grid.
CorrespondenceSet collect_display_volumetric(const OpticalSystem& sys, const SamplingSpec& spec,
                                             const NoiseSpec& noise);

/// Two-placement see-through calibration. Both target placements reuse the
/// same viewpoints and camera pixels; each observation of each placement gets
/// its own pixel perturbation.
CorrespondenceSet collect_seethru(const OpticalSystem& sys, const SamplingSpec& spec, const NoiseSpec& noise);

/// Baseline model fitted directly on (pixel, 3D viewpoint) without any
/// projection onto a base plane.
struct VolumetricDisplayModel {
    PolyModel poly;  ///< (pixel.x, pixel.y, view.x, view.y, view.z) -> slope (2), relative to +z
};

struct VolumetricFit {
    VolumetricDisplayModel model;
    FitReport report;
};

VolumetricFit fit_display_volumetric(const CorrespondenceSet& data, int degree, const FitOptions& opts = {});

UnitDir volumetric_forward(const VolumetricDisplayModel& m, const Vec2& p_pixel, const Vec3& p_view);

} // namespace hmdcal
