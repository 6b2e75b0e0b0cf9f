#include "hmdcal/geometry.hpp"

#include <cmath>
#include <sstream>

namespace hmdcal {

namespace {
constexpr double kOrthoTol = 1e-12;
constexpr double kOnPlaneTol = 1e-6;
constexpr double kGrazingCos = 1e-6;
constexpr double kBehindTol = 1e-9;
} // namespace

UnitDir::UnitDir(const Vec3& v) {
    const double n = v.norm();
    if (!std::isfinite(n) || n == 0.0) {
        fail(ErrorCode::InvalidArgument, "UnitDir: zero or non-finite vector");
    }
    v_ = v / n;
}

UnitDir UnitDir::from_unit(const Vec3& v) {
    if (!v.allFinite() || !(std::abs(v.norm() - 1.0) <= 1e-12)) {
        fail(ErrorCode::InvalidArgument, "UnitDir: vector is not unit length");
    }
    UnitDir out;
    out.v_ = v;
    return out;
}

UnitDir UnitDir::operator-() const {
    UnitDir out;
    out.v_ = -v_;
    return out;
}

ChartedPlane::ChartedPlane(const Vec3& origin, const Vec3& u_axis, const Vec3& v_axis)
    : origin_(origin), u_(u_axis), v_(v_axis) {
    if (!origin.allFinite() || std::abs(u_.norm() - 1.0) > kOrthoTol || std::abs(v_.norm() - 1.0) > kOrthoTol ||
        std::abs(u_.dot(v_)) > kOrthoTol) {
        fail(ErrorCode::InvalidArgument, "ChartedPlane: chart axes must be orthonormal");
    }
    n_ = u_.cross(v_);
}

Eigen::Matrix<double, 3, 2> ChartedPlane::chart_basis() const {
    Eigen::Matrix<double, 3, 2> e;
    e.col(0) = u_;
    e.col(1) = v_;
    return e;
}

Vec3 chart_to_world(const ChartedPlane& plane, const Vec2& q) {
    return plane.origin() + q.x() * plane.u_axis() + q.y() * plane.v_axis();
}

Vec2 world_to_chart(const ChartedPlane& plane, const Vec3& p) {
    const Vec3 d = p - plane.origin();
    const double off = d.dot(plane.normal());
    if (!(std::abs(off) < kOnPlaneTol)) {
        std::ostringstream msg;
        msg << "world_to_chart: point is " << off << " mm off the plane";
        fail(ErrorCode::OffPlane, msg.str());
    }
    return Vec2(d.dot(plane.u_axis()), d.dot(plane.v_axis()));
}

BackwardHit intersect_backward(const Vec3& p_view, const UnitDir& v, const ChartedPlane& plane) {
    const double cos_n = v.dot(plane.normal());
    if (std::abs(cos_n) <= kGrazingCos) {
        fail(ErrorCode::GrazingRay, "intersect_backward: direction is parallel to the plane");
    }
    const double height = plane.signed_distance(p_view);
    // p_view - t v lies on the plane for t = height / cos_n
    const double t = height / cos_n;
    if (t < -kBehindTol) {
        fail(ErrorCode::WrongSide, "intersect_backward: no intersection with t >= 0");
    }
    BackwardHit hit;
    hit.t = std::max(t, 0.0);
    const Vec3 d = p_view - hit.t * v.vec() - plane.origin();
    hit.chart = Vec2(d.dot(plane.u_axis()), d.dot(plane.v_axis()));
    return hit;
}

Vec2 dir_to_chart(const UnitDir& v, const ChartedPlane& plane) {
    const double cos_n = v.dot(plane.normal());
    if (!(cos_n > kGrazingCos)) {
        fail(ErrorCode::BackwardDirection, "dir_to_chart: direction outside the forward hemisphere");
    }
    return Vec2(v.dot(plane.u_axis()) / cos_n, v.dot(plane.v_axis()) / cos_n);
}

UnitDir chart_to_dir(const Vec2& s, const ChartedPlane& plane) {
    return UnitDir(s.x() * plane.u_axis() + s.y() * plane.v_axis() + plane.normal());
}

double angle_between(const Vec3& a, const Vec3& b) {
    // atan2 form keeps resolution at tiny angles where acos(dot) saturates.
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool intersect_forward(const Ray& ray, const ChartedPlane& plane, double& t) {
    const double cos_n = ray.dir.dot(plane.normal());
    if (std::abs(cos_n) <= kGrazingCos) {
        return false;
    }
    t = -plane.signed_distance(ray.origin) / cos_n;
    return t > 0.0;
}

} // namespace hmdcal
