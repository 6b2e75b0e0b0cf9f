#pragma once

// Monte Carlo accuracy of fitted models against the ray tracer, the fiber
// invariance comparison with the volumetric baseline, and the simulated
// dot-grid alignment check.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hmdcal/calibration.hpp"
#include "hmdcal/display_model.hpp"
#include "hmdcal/render.hpp"
#include "hmdcal/scene.hpp"
#include "hmdcal/seethru_model.hpp"

namespace hmdcal {

enum class MetricKind { PixelOffset_px, AngularDiscrepancy_rad, Misalignment_campx };

std::string to_string(MetricKind k);

struct EvalReport {
    MetricKind metric = MetricKind::PixelOffset_px;
    double rms = 0.0;
    double mean = 0.0;
    double p95 = 0.0;
    double max = 0.0;
    int count = 0;
    int dropped = 0;             ///< queries rejected by the oracle or outside the model domain
    nlohmann::json config;       ///< echo of the settings that produced the report
    std::vector<double> values;  ///< per-sample metric, query order
};

/// Summary statistics of values; p95 is the nearest-rank percentile. Throws
/// TooManyDropped when values is empty.
EvalReport summarize(MetricKind metric, std::vector<double> values, int dropped, nlohmann::json config = {});

/// Random held-out queries. Each query draws a base point and a slope
/// uniformly from the model's sampled box, then moves the viewpoint along
/// that ray to a height drawn from height_range above the base plane. Zero
/// height keeps the query on the training plane.
struct EvalSpec {
    int n_queries = 10000;
    std::uint64_t seed = 20240;
    Vec2 height_range = Vec2(1.0, 8.0);  ///< mm above the base plane
    Vec2 depth_range = Vec2(presets::kWorldPlusZ, presets::kWorldMinusZ);  ///< see-through real points, device z

    nlohmann::json to_json() const;
};

struct DisplayEval {
    EvalReport backward;  ///< pixel offset
    EvalReport forward;   ///< angle to the inverted ground truth
};

DisplayEval eval_display(const DisplayModel& m, const OpticalSystem& sys, const EvalSpec& spec);

struct SeethruEval {
    EvalReport forward;   ///< angle between modeled and traced world rays
    EvalReport backward;  ///< angle to the inverted ground-truth viewing direction
};

SeethruEval eval_seethru(const SeethruModel& m, const OpticalSystem& sys, const EvalSpec& spec);

/// Max forward-output discrepancy between two viewpoints 2 mm and 8 mm along
/// one ray, over n_fibers random (pixel, base point) pairs. The planar model
/// is probed along its own fibers; the volumetric model has none, so it is
/// probed along the traced ray through the same pixel and base point.
struct FiberInvariance {
    double planar = 0.0;
    double volumetric = 0.0;
    int count = 0;
};

FiberInvariance eval_fiber_invariance(const DisplayModel& planar, const VolumetricDisplayModel& volumetric,
                                      const OpticalSystem& sys, int n_fibers, std::uint64_t seed = 99);

/// Same probe for the see-through forward model: angle between the modeled
/// world rays from both viewpoints.
double eval_fiber_invariance(const SeethruModel& m, int n_fibers, std::uint64_t seed = 99);

/// Dot centroid in camera pixels plus its blob area.
struct DotBlob {
    Vec2 centroid = Vec2::Zero();
    int area = 0;
};

/// 4-connected blobs of pixels brighter than 0.5. Blobs touching the image
/// border or an invalid pixel are discarded.
std::vector<DotBlob> find_dots(const DisplayImage& img);

/// Eyeball-camera image of the real scene through the see-through optics.
DisplayImage capture_real(const PinholeCamera& cam, const OpticalSystem& sys_seethru, const DotGridScene& scene);

/// Eyeball-camera image of a panel image through the display optics,
/// nearest panel pixel.
DisplayImage capture_display(const PinholeCamera& cam, const OpticalSystem& sys_display, const DisplayImage& shown,
                             const PanelMeta& panel);

struct VerifyOptions {
    PinholeCamera camera = PinholeCamera::forward_looking(Vec3::Zero(), 1000.0, 601, 601);
    RenderOptions render;
    double ambiguity_px = 2.0;
};

/// Renders the scene for every viewpoint, captures the virtual and real dots
/// and reports the distance between mutually nearest dot pairs. Throws
/// UnmatchedDots when a dot has two candidates within ambiguity_px or a
/// viewpoint yields no pairs.
EvalReport verify_end_to_end(const DisplayModel& dm, const SeethruModel& sm, const OpticalSystem& sys_display,
                             const OpticalSystem& sys_seethru, const DotGridScene& scene,
                             const std::vector<Vec3>& viewpoints, const VerifyOptions& opts = {});

/// Eye positions used by the default verification run.
std::vector<Vec3> default_verify_viewpoints();

} // namespace hmdcal
