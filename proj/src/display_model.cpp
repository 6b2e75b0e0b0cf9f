#include "hmdcal/display_model.hpp"

#include <cmath>
#include <sstream>

namespace hmdcal {

namespace {
constexpr double kPlanarTol = 1e-9;
} // namespace

bool DisplayModel::base_in_box(const Vec2& base) const {
    const auto& box = bwd.input_box();
    return base.x() >= box[0].lo && base.x() <= box[0].hi && base.y() >= box[1].lo && base.y() <= box[1].hi;
}

UnitDir display_intermediate_forward(const DisplayModel& m, const Vec2& p_pixel, const Vec2& base) {
    const Eigen::Vector4d x(p_pixel.x(), p_pixel.y(), base.x(), base.y());
    const Eigen::VectorXd s = m.fwd.eval(x);
    return chart_to_dir(Vec2(s[0], s[1]), m.base_plane);
}

LiftResult lift_display(const DisplayModel& m, const Vec2& p_pixel, const Vec3& p_view, LiftState& state,
                        const LiftOptions& opts) {
    const ChartedPlane& base = m.base_plane;
    const double height = base.signed_distance(p_view);
    if (height < -kPlanarTol) {
        fail(ErrorCode::WrongSide, "lift_display: viewpoint behind the base plane");
    }
    const Vec3 foot = p_view - height * base.normal();
    Vec2 x0((foot - base.origin()).dot(base.u_axis()), (foot - base.origin()).dot(base.v_axis()));
    bool warm = false;
    if (opts.use_warm_start && state.last_solution && state.last_query_key == &m) {
        x0 = *state.last_solution;
        warm = true;
    }

    const Mat32 e = base.chart_basis();
    Eigen::Vector4d input(p_pixel.x(), p_pixel.y(), 0.0, 0.0);
    Eigen::VectorXd slope(2);
    Eigen::MatrixXd jac(2, 4);
    const LiftResidual residual = [&](const Vec2& x, Eigen::Vector3d& r, Mat32& j) {
        input[2] = x.x();
        input[3] = x.y();
        m.fwd.eval_with_jacobian(input, slope, jac);
        const Vec3 anchor = chart_to_world(base, x);
        const Vec3 dir = e * Vec2(slope[0], slope[1]) + base.normal();
        const Mat32 d_dir = e * jac.rightCols<2>();
        point_line_residual(anchor, e, dir, d_dir, p_view, true, r, j);
    };

    LiftResult out = solve_lift(x0, residual, opts);
    out.warm_started = warm;
    // supported domain: the sampled (base point, slope) box of the backward map
    const Eigen::VectorXd s_out = m.fwd.eval(Eigen::Vector4d(p_pixel.x(), p_pixel.y(), out.solution.x(), out.solution.y()));
    out.extrapolated = !m.bwd.in_box(Eigen::Vector4d(out.solution.x(), out.solution.y(), s_out[0], s_out[1])) ||
                       !m.fwd.in_box(Eigen::Vector4d(p_pixel.x(), p_pixel.y(), out.solution.x(), out.solution.y()));
    state.last_solution = out.solution;
    state.last_query_key = &m;
    return out;
}

UnitDir display_forward(const DisplayModel& m, const Vec2& p_pixel, const Vec3& p_view, LiftState& state,
                        const LiftOptions& opts, LiftResult* result) {
    const LiftResult lift = lift_display(m, p_pixel, p_view, state, opts);
    if (result != nullptr) {
        *result = lift;
    }
    return display_intermediate_forward(m, p_pixel, lift.solution);
}

Vec2 display_backward(const DisplayModel& m, const Vec3& p_view, const UnitDir& v) {
    const BackwardHit hit = intersect_backward(p_view, v, m.base_plane);
    const Vec2 s = dir_to_chart(v, m.base_plane);
    const Eigen::VectorXd px = m.bwd.eval(Eigen::Vector4d(hit.chart.x(), hit.chart.y(), s.x(), s.y()));
    return Vec2(px[0], px[1]);
}

DisplayFit fit_display(const CorrespondenceSet& data, int degree, const ChartedPlane& base_plane,
                       const PanelMeta& panel, const FitOptions& opts) {
    if (data.kind != SystemKind::Display) {
        fail(ErrorCode::InvalidArgument, "fit_display: dataset is not a display dataset");
    }
    const auto n = static_cast<Eigen::Index>(data.display.size());
    Eigen::MatrixXd x_fwd(n, 4);
    Eigen::MatrixXd y_fwd(n, 2);
    Eigen::MatrixXd x_bwd(n, 4);
    Eigen::MatrixXd y_bwd(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const DisplaySample& smp = data.display[static_cast<std::size_t>(i)];
        const double off = base_plane.signed_distance(smp.p_view);
        if (!(std::abs(off) <= kPlanarTol)) {
            std::ostringstream msg;
            msg << "fit_display: sample " << i << " viewpoint is " << off << " mm off the base plane";
            fail(ErrorCode::OffPlane, msg.str());
        }
        const Vec2 base = world_to_chart(base_plane, smp.p_view);
        const Vec2 s = dir_to_chart(smp.v, base_plane);
        x_fwd.row(i) << smp.p_pixel.x(), smp.p_pixel.y(), base.x(), base.y();
        y_fwd.row(i) << s.x(), s.y();
        x_bwd.row(i) << base.x(), base.y(), s.x(), s.y();
        y_bwd.row(i) << smp.p_pixel.x(), smp.p_pixel.y();
    }
    auto [fwd, fwd_report] = fit_poly(x_fwd, y_fwd, degree, opts);
    auto [bwd, bwd_report] = fit_poly(x_bwd, y_bwd, degree, opts);
    DisplayFit out;
    out.model.fwd = std::move(fwd);
    out.model.bwd = std::move(bwd);
    out.model.base_plane = base_plane;
    out.model.panel = panel;
    out.fwd_report = fwd_report;
    out.bwd_report = bwd_report;
    return out;
}

} // namespace hmdcal
