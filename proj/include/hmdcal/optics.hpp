#pragma once

// Sequential geometric ray tracer used as ground truth for the display and
// see-through optics, plus the pinhole eyeball camera.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hmdcal/geometry.hpp"

namespace hmdcal {

/// Spherical surface |p - center| = |radius|. Positive radius puts the
/// center on the +z side of the vertex (the cap is the -z half of the
/// sphere); negative radius mirrors that. The clear aperture is a cylinder
/// of aperture_radius around the system z axis.
struct SphericalCap {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
    double aperture_radius = 0.0;
};

/// Planar surface; aperture_radius <= 0 means unbounded.
struct PlaneSurface {
    ChartedPlane plane;
    double aperture_radius = 0.0;
};

/// n_before is the index on the -z (eye) side, n_after on the +z side.
struct Refract {
    double n_before = 1.0;
    double n_after = 1.0;
};

struct Reflect {};

struct Surface {
    std::variant<SphericalCap, PlaneSurface> shape;
    std::variant<Refract, Reflect> interaction;

    /// Checks |radius| > aperture > 0 for caps and indices >= 1.
    void validate() const;
};

enum class SystemKind { Display, Seethru };

struct Panel {
    ChartedPlane plane;
    double pitch_mm = 0.05;  ///< mm per pixel
    int width = 0;
    int height = 0;
};

/// Ordered surfaces (eye to world) plus either a display panel or the pair of
/// world parameterization planes.
struct OpticalSystem {
    std::string name;
    SystemKind kind = SystemKind::Display;
    std::vector<Surface> surfaces;
    std::optional<Panel> panel;
    std::optional<std::pair<ChartedPlane, ChartedPlane>> world_planes;

    void validate() const;
};

/// One refraction or reflection. The incident side of a refracting surface
/// follows from the ray direction, so the same call serves reversed traces.
/// Throws Miss or TotalInternalReflection.
Ray interact(const Ray& ray, const Surface& surface);

/// Traces through every surface in list order (or reversed). The returned ray
/// starts on the last surface hit.
Ray trace_surfaces(const Ray& ray, const std::vector<Surface>& surfaces, bool toward_world = true);

/// Panel pixel coordinates (chart mm / pitch, origin at panel center) hit by
/// the ray leaving p_view along v.
Vec2 trace_display_gt(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys);

/// Exit ray of the see-through path (origin on the last surface).
Ray trace_seethru_exit(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys);

/// Chart coordinates on the two world planes of the exit ray.
std::pair<Vec2, Vec2> trace_seethru_gt(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys);

struct InversionOptions {
    int max_iterations = 100;
    double tolerance = 1e-9;  ///< px for display, mm for see-through
};

/// Direction from p_view whose trace lands on p_pixel, by damped Newton over
/// the slope chart seeded with the straight line to the panel point.
/// Throws NoConvergence.
UnitDir invert_display_gt(const Vec2& p_pixel, const Vec3& p_view, const OpticalSystem& sys,
                          const InversionOptions& opts = {});

/// Viewing direction under which p_view sees p_real through the see-through
/// optics. Throws NoConvergence.
UnitDir invert_seethru_gt(const Vec3& p_view, const Vec3& p_real, const OpticalSystem& sys,
                          const InversionOptions& opts = {});

class PinholeCamera {
public:
    PinholeCamera() = default;
    /// orientation columns are the camera x, y and forward axes in the
    /// device frame.
    PinholeCamera(const Vec3& position, const Eigen::Matrix3d& orientation, double focal_px, int width, int height,
                  const Vec2& principal);

    /// Camera looking along +z with principal point at the image center.
    static PinholeCamera forward_looking(const Vec3& position, double focal_px, int width, int height);

    PinholeCamera moved_to(const Vec3& position) const;

    const Vec3& position() const { return position_; }
    const Eigen::Matrix3d& orientation() const { return orientation_; }
    double focal_px() const { return focal_px_; }
    int width() const { return width_; }
    int height() const { return height_; }
    const Vec2& principal() const { return principal_; }

    bool in_image(const Vec2& px) const;

    /// Throws OutOfImage for px outside [-0.5, w - 0.5] x [-0.5, h - 0.5].
    Ray camera_ray(const Vec2& px) const;
    /// camera_ray without the image-bounds check (perturbed edge samples).
    Ray ray_through(const Vec2& px) const;

    /// Perspective projection; empty for points at or behind the camera.
    std::optional<Vec2> project(const Vec3& p) const;

private:
    Vec3 position_ = Vec3::Zero();
    Eigen::Matrix3d orientation_ = Eigen::Matrix3d::Identity();
    double focal_px_ = 1000.0;
    int width_ = 601;
    int height_ = 601;
    Vec2 principal_ = Vec2(300, 300);
};

namespace presets {

/// Shared geometry of the shipped systems.
inline constexpr double kOpticsZ = 25.0;
inline constexpr double kPanelZ = 40.0;
inline constexpr double kPanelPitch = 0.05;
inline constexpr int kPanelPixels = 800;
inline constexpr double kWorldPlusZ = 1000.0;
inline constexpr double kWorldMinusZ = 2000.0;

OpticalSystem identity_display();
OpticalSystem identity_seethru();
/// Plano-convex refractive cap in front of the panel.
OpticalSystem singlet();
/// Two tilted spherical refractive surfaces.
OpticalSystem wedge_combiner();

std::vector<std::string> names();

/// Looks up "identity", "singlet" or "wedge_combiner" for the given kind.
/// Throws InvalidArgument when the preset has no system of that kind.
OpticalSystem by_name(const std::string& name, SystemKind kind);

} // namespace presets

} // namespace hmdcal
