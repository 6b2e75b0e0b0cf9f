#include "hmdcal/seethru_model.hpp"

#include <cmath>
#include <sstream>

namespace hmdcal {

namespace {

constexpr double kPlanarTol = 1e-9;
constexpr double kDegenerateSeparation = 1e-6;

Vec2 chart_of(const ChartedPlane& plane, const Vec3& p) {
    const Vec3 d = p - plane.origin();
    return Vec2(d.dot(plane.u_axis()), d.dot(plane.v_axis()));
}

} // namespace

bool SeethruModel::base_in_box(const Vec2& base) const {
    const auto& box = fwd.input_box();
    return base.x() >= box[0].lo && base.x() <= box[0].hi && base.y() >= box[1].lo && base.y() <= box[1].hi;
}

std::pair<Vec2, Vec2> seethru_forward(const SeethruModel& m, const Vec3& p_view, const UnitDir& v) {
    const BackwardHit hit = intersect_backward(p_view, v, m.base_plane);
    const Vec2 s = dir_to_chart(v, m.base_plane);
    const Eigen::VectorXd out = m.fwd.eval(Eigen::Vector4d(hit.chart.x(), hit.chart.y(), s.x(), s.y()));
    return {Vec2(out[0], out[1]), Vec2(out[2], out[3])};
}

std::pair<Vec3, Vec3> seethru_world_ray(const SeethruModel& m, const Vec3& p_view, const UnitDir& v,
                                        bool* extrapolated) {
    if (extrapolated != nullptr) {
        const BackwardHit hit = intersect_backward(p_view, v, m.base_plane);
        const Vec2 s = dir_to_chart(v, m.base_plane);
        *extrapolated = !m.fwd.in_box(Eigen::Vector4d(hit.chart.x(), hit.chart.y(), s.x(), s.y()));
    }
    const auto [plus, minus] = seethru_forward(m, p_view, v);
    return {chart_to_world(m.world_planes.first, plus), chart_to_world(m.world_planes.second, minus)};
}

LiftOptions seethru_lift_defaults() {
    LiftOptions o;
    o.diverged_residual = 1e-4;
    return o;
}

LiftResult lift_seethru(const SeethruModel& m, const Vec3& p_view, const Vec3& p_real, LiftState& state,
                        const LiftOptions& opts) {
    const ChartedPlane& base = m.base_plane;
    const double height = base.signed_distance(p_view);
    if (height < -kPlanarTol) {
        fail(ErrorCode::WrongSide, "lift_seethru: viewpoint behind the base plane");
    }
    // cold start: orthogonal projection of the viewpoint, as for the display lift
    Vec2 x0 = chart_of(base, p_view - height * base.normal());
    bool warm = false;
    if (opts.use_warm_start && state.last_solution && state.last_query_key == &m) {
        x0 = *state.last_solution;
        warm = true;
    }

    const Mat32 e_plus = m.world_planes.first.chart_basis();
    const Mat32 e_minus = m.world_planes.second.chart_basis();
    Eigen::Vector4d input;
    Eigen::VectorXd value(4);
    Eigen::MatrixXd jac(4, 4);
    const LiftResidual residual = [&](const Vec2& x, Eigen::Vector3d& r, Mat32& j) {
        const Vec3 d = p_view - chart_to_world(base, x);
        if (d.norm() < kDegenerateSeparation) {
            fail(ErrorCode::DegenerateDirection, "lift_seethru: base point coincides with the viewpoint");
        }
        const double dn = d.dot(base.normal());
        if (!(dn > 0.0)) {
            fail(ErrorCode::DegenerateDirection, "lift_seethru: viewing direction leaves the forward hemisphere");
        }
        const Vec2 s(d.dot(base.u_axis()) / dn, d.dot(base.v_axis()) / dn);
        input << x.x(), x.y(), s.x(), s.y();
        m.fwd.eval_with_jacobian(input, value, jac);
        // ds/dx = -I / dn because d . n is constant over the plane
        const Eigen::Matrix<double, 4, 2> d_out = jac.leftCols<2>() - jac.rightCols<2>() / dn;
        const Vec3 plus = chart_to_world(m.world_planes.first, Vec2(value[0], value[1]));
        const Vec3 minus = chart_to_world(m.world_planes.second, Vec2(value[2], value[3]));
        const Mat32 d_plus = e_plus * d_out.topRows<2>();
        const Mat32 d_minus = e_minus * d_out.bottomRows<2>();
        point_line_residual(plus, d_plus, plus - minus, d_plus - d_minus, p_real, false, r, j);
    };

    LiftResult out = solve_lift(x0, residual, opts);
    out.warm_started = warm;
    const Vec3 d = p_view - chart_to_world(base, out.solution);
    const double dn = d.dot(base.normal());
    out.extrapolated = !m.fwd.in_box(Eigen::Vector4d(out.solution.x(), out.solution.y(), d.dot(base.u_axis()) / dn,
                                                     d.dot(base.v_axis()) / dn));
    state.last_solution = out.solution;
    state.last_query_key = &m;
    return out;
}

UnitDir seethru_backward(const SeethruModel& m, const Vec3& p_view, const Vec3& p_real, LiftState& state,
                         const LiftOptions& opts, LiftResult* result) {
    const LiftResult lift = lift_seethru(m, p_view, p_real, state, opts);
    if (result != nullptr) {
        *result = lift;
    }
    return UnitDir(p_view - chart_to_world(m.base_plane, lift.solution));
}

SeethruFit fit_seethru(const CorrespondenceSet& data, int degree, const ChartedPlane& base_plane,
                       const std::pair<ChartedPlane, ChartedPlane>& world_planes, const FitOptions& opts) {
    if (data.kind != SystemKind::Seethru) {
        fail(ErrorCode::InvalidArgument, "fit_seethru: dataset is not a see-through dataset");
    }
    const auto n = static_cast<Eigen::Index>(data.seethru.size());
    Eigen::MatrixXd x(n, 4);
    Eigen::MatrixXd y(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const SeethruSample& smp = data.seethru[static_cast<std::size_t>(i)];
        if (!smp.p_plus.allFinite() || !smp.p_minus.allFinite()) {
            std::ostringstream msg;
            msg << "fit_seethru: sample " << i << " is missing a world-plane target";
            fail(ErrorCode::InvalidArgument, msg.str());
        }
        const double off = base_plane.signed_distance(smp.p_view);
        if (!(std::abs(off) <= kPlanarTol)) {
            std::ostringstream msg;
            msg << "fit_seethru: sample " << i << " viewpoint is " << off << " mm off the base plane";
            fail(ErrorCode::OffPlane, msg.str());
        }
        const Vec2 base = world_to_chart(base_plane, smp.p_view);
        const Vec2 s = dir_to_chart(smp.v, base_plane);
        x.row(i) << base.x(), base.y(), s.x(), s.y();
        y.row(i) << smp.p_plus.x(), smp.p_plus.y(), smp.p_minus.x(), smp.p_minus.y();
    }
    auto [fwd, report] = fit_poly(x, y, degree, opts);
    SeethruFit out;
    out.model.fwd = std::move(fwd);
    out.model.base_plane = base_plane;
    out.model.world_planes = world_planes;
    out.report = report;
    return out;
}

} // namespace hmdcal
