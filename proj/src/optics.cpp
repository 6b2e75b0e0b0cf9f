#include "hmdcal/optics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace hmdcal {

namespace {

constexpr double kMinHitT = 1e-9;

struct Hit {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  ///< unit, oriented toward +z
};

bool within_aperture(const Vec3& p, double aperture) {
    return aperture <= 0.0 || std::hypot(p.x(), p.y()) <= aperture;
}

std::optional<Hit> hit_cap(const Ray& ray, const SphericalCap& cap) {
    const Vec3 oc = ray.origin - cap.center;
    const double b = ray.dir.dot(oc);
    const double c = oc.squaredNorm() - cap.radius * cap.radius;
    const double disc = b * b - c;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double root = std::sqrt(disc);
    const double sign = cap.radius > 0 ? 1.0 : -1.0;
    for (double t : {-b - root, -b + root}) {
        if (t <= kMinHitT) {
            continue;
        }
        const Vec3 p = ray.at(t);
        // cap half lies on the vertex side of the center
        if (sign * (cap.center.z() - p.z()) <= 0.0 || !within_aperture(p, cap.aperture_radius)) {
            continue;
        }
        Hit h;
        h.t = t;
        h.point = p;
        h.normal = (sign * (cap.center - p)).normalized();
        return h;
    }
    return std::nullopt;
}

std::optional<Hit> hit_plane(const Ray& ray, const PlaneSurface& surf) {
    double t = 0.0;
    if (!intersect_forward(ray, surf.plane, t) || t <= kMinHitT) {
        return std::nullopt;
    }
    const Vec3 p = ray.at(t);
    if (!within_aperture(p, surf.aperture_radius)) {
        return std::nullopt;
    }
    Hit h;
    h.t = t;
    h.point = p;
    h.normal = surf.plane.normal().z() >= 0 ? surf.plane.normal() : Vec3(-surf.plane.normal());
    return h;
}

Vec3 refract_dir(const Vec3& d, const Vec3& normal_up, double n_before, double n_after) {
    // crossing from the -z side to the +z side goes n_before -> n_after
    const bool upward = d.dot(normal_up) > 0.0;
    const double n1 = upward ? n_before : n_after;
    const double n2 = upward ? n_after : n_before;
    const Vec3 nn = upward ? Vec3(-normal_up) : normal_up;  // faces the incoming ray
    const double eta = n1 / n2;
    const double cos_i = -d.dot(nn);
    const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
    if (k < 0.0) {
        fail(ErrorCode::TotalInternalReflection, "interact: total internal reflection");
    }
    return (eta * d + (eta * cos_i - std::sqrt(k)) * nn).normalized();
}

Vec3 slope_dir(const Vec2& s) { return Vec3(s.x(), s.y(), 1.0).normalized(); }

Vec2 slope_of(const Vec3& d) { return Vec2(d.x() / d.z(), d.y() / d.z()); }

// Damped Newton over slope space with a central-difference Jacobian. The
// residual callback may throw for rays that do not survive the optics.
template <typename Residual>
UnitDir newton_over_slope(Vec2 s, Residual&& residual, const InversionOptions& opts, const char* what) {
    auto eval = [&](const Vec2& q, Vec2& out) {
        try {
            out = residual(q);
            return out.allFinite();
        } catch (const Error&) {
            return false;
        }
    };
    Vec2 f;
    if (!eval(s, f)) {
        fail(ErrorCode::NoConvergence, std::string(what) + ": seed ray does not reach the target");
    }
    constexpr double h = 1e-6;
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (f.norm() <= opts.tolerance) {
            return UnitDir(slope_dir(s));
        }
        Eigen::Matrix2d jac;
        for (int k = 0; k < 2; ++k) {
            Vec2 fp;
            Vec2 fm;
            Vec2 dp = s;
            Vec2 dm = s;
            dp[k] += h;
            dm[k] -= h;
            if (!eval(dp, fp) || !eval(dm, fm)) {
                fail(ErrorCode::NoConvergence, std::string(what) + ": Jacobian probe left the aperture");
            }
            jac.col(k) = (fp - fm) / (2 * h);
        }
        const Vec2 step = -jac.partialPivLu().solve(f);
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
            Vec2 ft;
            const Vec2 st = s + alpha * step;
            if (eval(st, ft) && ft.norm() < f.norm()) {
                s = st;
                f = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            break;
        }
    }
    if (f.norm() <= opts.tolerance) {
        return UnitDir(slope_dir(s));
    }
    std::ostringstream msg;
    msg << what << ": no convergence, residual " << f.norm();
    fail(ErrorCode::NoConvergence, msg.str());
}

} // namespace

void Surface::validate() const {
    if (const auto* cap = std::get_if<SphericalCap>(&shape)) {
        if (!(cap->aperture_radius > 0.0) ||
            !(std::abs(cap->radius) > cap->aperture_radius + std::hypot(cap->center.x(), cap->center.y()))) {
            fail(ErrorCode::InvalidArgument, "SphericalCap: need |radius| > aperture_radius > 0");
        }
    }
    if (const auto* r = std::get_if<Refract>(&interaction)) {
        if (!(r->n_before >= 1.0) || !(r->n_after >= 1.0)) {
            fail(ErrorCode::InvalidArgument, "Refract: indices must be >= 1");
        }
    }
}

void OpticalSystem::validate() const {
    for (const auto& s : surfaces) {
        s.validate();
    }
    if (kind == SystemKind::Display && (!panel || world_planes)) {
        fail(ErrorCode::InvalidArgument, "display system needs a panel and no world planes");
    }
    if (kind == SystemKind::Seethru && (panel || !world_planes)) {
        fail(ErrorCode::InvalidArgument, "see-through system needs world planes and no panel");
    }
    if (panel && (panel->width <= 0 || panel->height <= 0 || !(panel->pitch_mm > 0.0))) {
        fail(ErrorCode::InvalidArgument, "panel: bad resolution or pitch");
    }
    if (world_planes && !(world_planes->first.origin().z() < world_planes->second.origin().z())) {
        fail(ErrorCode::InvalidArgument, "world planes must satisfy z_plus < z_minus");
    }
}

Ray interact(const Ray& ray, const Surface& surface) {
    std::optional<Hit> hit = std::visit(
        [&](const auto& shape) -> std::optional<Hit> {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, SphericalCap>) {
                return hit_cap(ray, shape);
            } else {
                return hit_plane(ray, shape);
            }
        },
        surface.shape);
    if (!hit) {
        fail(ErrorCode::Miss, "interact: ray misses the surface aperture");
    }
    Ray out;
    out.origin = hit->point;
    const Vec3& d = ray.dir.vec();
    if (const auto* r = std::get_if<Refract>(&surface.interaction)) {
        out.dir = UnitDir(refract_dir(d, hit->normal, r->n_before, r->n_after));
    } else {
        out.dir = UnitDir(d - 2.0 * d.dot(hit->normal) * hit->normal);
    }
    return out;
}

Ray trace_surfaces(const Ray& ray, const std::vector<Surface>& surfaces, bool toward_world) {
    Ray r = ray;
    if (toward_world) {
        for (const auto& s : surfaces) {
            r = interact(r, s);
        }
    } else {
        for (auto it = surfaces.rbegin(); it != surfaces.rend(); ++it) {
            r = interact(r, *it);
        }
    }
    return r;
}

Vec2 trace_display_gt(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys) {
    if (!sys.panel) {
        fail(ErrorCode::InvalidArgument, "trace_display_gt: system has no panel");
    }
    const Panel& panel = *sys.panel;
    const Ray out = trace_surfaces(Ray{p_view, v}, sys.surfaces);
    double t = 0.0;
    if (!intersect_forward(out, panel.plane, t)) {
        fail(ErrorCode::RayLost, "trace_display_gt: ray does not reach the panel");
    }
    const Vec3 d = out.at(t) - panel.plane.origin();
    const Vec2 px(d.dot(panel.plane.u_axis()) / panel.pitch_mm, d.dot(panel.plane.v_axis()) / panel.pitch_mm);
    if (std::abs(px.x()) > 0.5 * panel.width || std::abs(px.y()) > 0.5 * panel.height) {
        fail(ErrorCode::RayLost, "trace_display_gt: ray lands outside the panel");
    }
    return px;
}

Ray trace_seethru_exit(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys) {
    return trace_surfaces(Ray{p_view, v}, sys.surfaces);
}

std::pair<Vec2, Vec2> trace_seethru_gt(const Vec3& p_view, const UnitDir& v, const OpticalSystem& sys) {
    if (!sys.world_planes) {
        fail(ErrorCode::InvalidArgument, "trace_seethru_gt: system has no world planes");
    }
    const Ray out = trace_seethru_exit(p_view, v, sys);
    double t_plus = 0.0;
    double t_minus = 0.0;
    const auto& [plus, minus] = *sys.world_planes;
    if (!intersect_forward(out, plus, t_plus) || !intersect_forward(out, minus, t_minus)) {
        fail(ErrorCode::RayLost, "trace_seethru_gt: exit ray does not reach the world planes");
    }
    const Vec3 dp = out.at(t_plus) - plus.origin();
    const Vec3 dm = out.at(t_minus) - minus.origin();
    return {Vec2(dp.dot(plus.u_axis()), dp.dot(plus.v_axis())), Vec2(dm.dot(minus.u_axis()), dm.dot(minus.v_axis()))};
}

UnitDir invert_display_gt(const Vec2& p_pixel, const Vec3& p_view, const OpticalSystem& sys,
                          const InversionOptions& opts) {
    if (!sys.panel) {
        fail(ErrorCode::InvalidArgument, "invert_display_gt: system has no panel");
    }
    const Panel& panel = *sys.panel;
    const Vec3 nominal = chart_to_world(panel.plane, p_pixel * panel.pitch_mm);
    const Vec3 seed = nominal - p_view;
    if (!(seed.z() > 0.0)) {
        fail(ErrorCode::NoConvergence, "invert_display_gt: panel point is behind the viewpoint");
    }
    return newton_over_slope(
        slope_of(seed),
        [&](const Vec2& s) -> Vec2 { return trace_display_gt(p_view, UnitDir(slope_dir(s)), sys) - p_pixel; },
        opts, "invert_display_gt");
}

UnitDir invert_seethru_gt(const Vec3& p_view, const Vec3& p_real, const OpticalSystem& sys,
                          const InversionOptions& opts) {
    const Vec3 seed = p_real - p_view;
    if (!(seed.z() > 0.0)) {
        fail(ErrorCode::NoConvergence, "invert_seethru_gt: real point is behind the viewpoint");
    }
    const ChartedPlane depth = ChartedPlane::at_z(p_real.z());
    return newton_over_slope(
        slope_of(seed),
        [&](const Vec2& s) -> Vec2 {
            const Ray out = trace_seethru_exit(p_view, UnitDir(slope_dir(s)), sys);
            double t = 0.0;
            if (!intersect_forward(out, depth, t)) {
                fail(ErrorCode::RayLost, "invert_seethru_gt: exit ray misses the depth plane");
            }
            const Vec3 hit = out.at(t);
            return Vec2(hit.x() - p_real.x(), hit.y() - p_real.y());
        },
        opts, "invert_seethru_gt");
}

PinholeCamera::PinholeCamera(const Vec3& position, const Eigen::Matrix3d& orientation, double focal_px, int width,
                             int height, const Vec2& principal)
    : position_(position), orientation_(orientation), focal_px_(focal_px), width_(width), height_(height),
      principal_(principal) {
    if (!(focal_px > 0.0) || width <= 0 || height <= 0) {
        fail(ErrorCode::InvalidArgument, "PinholeCamera: focal and resolution must be positive");
    }
    if ((orientation.transpose() * orientation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-12) {
        fail(ErrorCode::InvalidArgument, "PinholeCamera: orientation is not orthonormal");
    }
}

PinholeCamera PinholeCamera::forward_looking(const Vec3& position, double focal_px, int width, int height) {
    return PinholeCamera(position, Eigen::Matrix3d::Identity(), focal_px, width, height,
                         Vec2(0.5 * (width - 1), 0.5 * (height - 1)));
}

PinholeCamera PinholeCamera::moved_to(const Vec3& position) const {
    PinholeCamera c = *this;
    c.position_ = position;
    return c;
}

bool PinholeCamera::in_image(const Vec2& px) const {
    return px.x() >= -0.5 && px.y() >= -0.5 && px.x() <= width_ - 0.5 && px.y() <= height_ - 0.5;
}

Ray PinholeCamera::camera_ray(const Vec2& px) const {
    if (!in_image(px)) {
        fail(ErrorCode::OutOfImage, "camera_ray: pixel outside the image");
    }
    return ray_through(px);
}

Ray PinholeCamera::ray_through(const Vec2& px) const {
    const Vec2 xy = (px - principal_) / focal_px_;
    return Ray{position_, UnitDir(orientation_ * Vec3(xy.x(), xy.y(), 1.0))};
}

std::optional<Vec2> PinholeCamera::project(const Vec3& p) const {
    const Vec3 c = orientation_.transpose() * (p - position_);
    if (!(c.z() > 0.0)) {
        return std::nullopt;
    }
    return Vec2(principal_.x() + focal_px_ * c.x() / c.z(), principal_.y() + focal_px_ * c.y() / c.z());
}

namespace presets {

namespace {

Panel default_panel() {
    Panel p;
    p.plane = ChartedPlane::at_z(kPanelZ);
    p.pitch_mm = kPanelPitch;
    p.width = kPanelPixels;
    p.height = kPanelPixels;
    return p;
}

std::pair<ChartedPlane, ChartedPlane> default_world_planes() {
    return {ChartedPlane::at_z(kWorldPlusZ), ChartedPlane::at_z(kWorldMinusZ)};
}

} // namespace

OpticalSystem identity_display() {
    OpticalSystem sys;
    sys.name = "identity";
    sys.kind = SystemKind::Display;
    sys.panel = default_panel();
    return sys;
}

OpticalSystem identity_seethru() {
    OpticalSystem sys;
    sys.name = "identity";
    sys.kind = SystemKind::Seethru;
    sys.world_planes = default_world_planes();
    return sys;
}

OpticalSystem singlet() {
    // f ~ 100 mm magnifier, convex side toward the eye
    constexpr double radius = 50.0;
    OpticalSystem sys = identity_display();
    sys.name = "singlet";
    sys.surfaces.push_back(
        Surface{SphericalCap{Vec3(0, 0, kOpticsZ + radius), radius, 18.0}, Refract{1.0, 1.5}});
    sys.surfaces.push_back(Surface{PlaneSurface{ChartedPlane::at_z(kOpticsZ + 5.0), 18.0}, Refract{1.5, 1.0}});
    return sys;
}

OpticalSystem wedge_combiner() {
    // surface normals near the axis are tilted by ~0.05 and ~0.02 rad
    OpticalSystem sys = identity_seethru();
    sys.name = "wedge_combiner";
    sys.surfaces.push_back(Surface{SphericalCap{Vec3(15.0, 0, kOpticsZ + 300.0), 300.0, 30.0}, Refract{1.0, 1.5}});
    sys.surfaces.push_back(
        Surface{SphericalCap{Vec3(5.6, 0, kOpticsZ + 4.0 + 280.0), 280.0, 30.0}, Refract{1.5, 1.0}});
    return sys;
}

std::vector<std::string> names() { return {"identity", "singlet", "wedge_combiner"}; }

OpticalSystem by_name(const std::string& name, SystemKind kind) {
    if (name == "identity") {
        return kind == SystemKind::Display ? identity_display() : identity_seethru();
    }
    if (name == "singlet" && kind == SystemKind::Display) {
        return singlet();
    }
    if (name == "wedge_combiner" && kind == SystemKind::Seethru) {
        return wedge_combiner();
    }
    fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "' for this system kind");
}

} // namespace presets

} // namespace hmdcal
