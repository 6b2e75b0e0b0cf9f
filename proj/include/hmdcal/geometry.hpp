#pragma once

// Points, directions and charted planes in the device frame.
//
// Frame convention: +z points from the eye toward the optics and the world.
// Positions are in millimeters. Base planes carry normal +z and valid
// viewpoints lie on their positive side.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hmdcal/error.hpp"

namespace hmdcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Unit-length 3D direction. Construction normalizes; zero or non-finite
/// input is rejected.
class UnitDir {
public:
    UnitDir() : v_(Vec3::UnitZ()) {}
    explicit UnitDir(const Vec3& v);

    static UnitDir unit_z() { return UnitDir(); }
    /// Keeps v bit-for-bit; throws InvalidArgument unless | ||v|| - 1 | <= 1e-12.
    static UnitDir from_unit(const Vec3& v);

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    double dot(const Vec3& o) const { return v_.dot(o); }
    UnitDir operator-() const;

private:
    Vec3 v_;
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    UnitDir dir;

    Vec3 at(double t) const { return origin + t * dir.vec(); }
};

/// Oriented plane with an orthonormal 2D coordinate chart.
class ChartedPlane {
public:
    ChartedPlane() : ChartedPlane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()) {}
    /// u and v must be orthonormal within 1e-12; normal is u x v.
    ChartedPlane(const Vec3& origin, const Vec3& u_axis, const Vec3& v_axis);

    /// Plane z = const with chart axes x, y.
    static ChartedPlane at_z(double z) { return ChartedPlane(Vec3(0, 0, z), Vec3::UnitX(), Vec3::UnitY()); }

    const Vec3& origin() const { return origin_; }
    const Vec3& u_axis() const { return u_; }
    const Vec3& v_axis() const { return v_; }
    const Vec3& normal() const { return n_; }

    /// Signed distance along the normal.
    double signed_distance(const Vec3& p) const { return (p - origin_).dot(n_); }

    /// 3x2 matrix whose columns are the chart axes.
    Eigen::Matrix<double, 3, 2> chart_basis() const;

private:
    Vec3 origin_;
    Vec3 u_;
    Vec3 v_;
    Vec3 n_;
};

Vec3 chart_to_world(const ChartedPlane& plane, const Vec2& q);

/// Throws OffPlane when |(p - origin) . n| >= 1e-6 mm.
Vec2 world_to_chart(const ChartedPlane& plane, const Vec3& p);

struct BackwardHit {
    double t = 0.0;  ///< ray parameter, >= 0
    Vec2 chart = Vec2::Zero();
};

/// Follows the reversed direction from p_view until it meets the plane:
/// the closed-form minimizer of dist(p_view - t v, plane) over t >= 0.
/// Throws GrazingRay for |v.n| <= 1e-6 and WrongSide when p_view lies behind
/// the plane.
BackwardHit intersect_backward(const Vec3& p_view, const UnitDir& v, const ChartedPlane& plane);

/// Slope coordinates of a forward-hemisphere direction relative to the plane
/// normal: (v.u / v.n, v.v / v.n). Throws BackwardDirection for v.n <= 1e-6.
Vec2 dir_to_chart(const UnitDir& v, const ChartedPlane& plane);
UnitDir chart_to_dir(const Vec2& s, const ChartedPlane& plane);

/// Guarded unsigned angle between two unit vectors.
double angle_between(const Vec3& a, const Vec3& b);

/// Forward intersection of a ray with a plane, t > 0. Returns false when the
/// ray is parallel to the plane or the hit lies behind the origin.
bool intersect_forward(const Ray& ray, const ChartedPlane& plane, double& t);

} // namespace hmdcal
