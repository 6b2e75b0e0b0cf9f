#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../support.hpp"

using namespace hmdcal;
using hmdcal::test::display_fit;
using hmdcal::test::draw_fiber_query;
using hmdcal::test::error_code;
using hmdcal::test::Gen;

namespace {

constexpr double kPitch = presets::kPanelPitch;

Vec3 panel_point(const Vec2& pixel) { return Vec3(pixel.x() * kPitch, pixel.y() * kPitch, presets::kPanelZ); }

Vec2 straight_pixel(const Vec3& p_view, const UnitDir& v) {
    const double t = (presets::kPanelZ - p_view.z()) / v.z();
    const Vec3 hit = p_view + t * v.vec();
    return Vec2(hit.x(), hit.y()) / kPitch;
}

// Base-plane point on the straight line from the panel point through p_view.
Vec2 straight_base(const Vec2& pixel, const Vec3& p_view, double base_z) {
    const Vec3 d = p_view - panel_point(pixel);
    const Vec3 hit = p_view + ((base_z - p_view.z()) / d.z()) * d;
    return Vec2(hit.x(), hit.y());
}

struct Supported {
    Vec2 pixel;
    Vec3 p_view;
    UnitDir v;
};

// Off-plane query on a sampled (base, slope) fiber with its traced pixel.
Supported draw_supported(Gen& g, const DisplayModel& m, const OpticalSystem& sys) {
    for (;;) {
        const auto q = draw_fiber_query(g, m.bwd, m.base_plane, 1.0, 8.0);
        Vec2 px;
        if (!error_code([&] { px = trace_display_gt(q.p_view, q.v, sys); })) {
            return Supported{px, q.p_view, q.v};
        }
    }
}

} // namespace

TEST_SUITE("display_model") {

TEST_CASE("identity fit is exact") {
    const DisplayFit& f = display_fit("identity");
    CHECK(f.fwd_report.rms_residual <= 1e-6);
    CHECK(f.bwd_report.rms_residual <= 1e-6);
    CHECK(f.fwd_report.n_samples == 18225);
}

TEST_CASE("on-axis symmetry") {
    const DisplayModel& m = display_fit("identity").model;
    LiftState s;
    const UnitDir v = display_forward(m, Vec2(0, 0), Vec3(0, 0, 6), s);
    CHECK(angle_between(v.vec(), Vec3::UnitZ()) <= 1e-6);
    CHECK(display_backward(m, Vec3(0, 0, 6), UnitDir::unit_z()).norm() <= 1e-3);
}

TEST_CASE("identity forward and backward follow straight lines") {
    const DisplayModel& m = display_fit("identity").model;
    const OpticalSystem sys = presets::identity_display();
    Gen g(51);
    for (int i = 0; i < 500; ++i) {
        const Supported q = draw_supported(g, m, sys);
        LiftState s;
        const UnitDir v = display_forward(m, q.pixel, q.p_view, s);
        const Vec3 straight = (panel_point(q.pixel) - q.p_view).normalized();
        CHECK(angle_between(v.vec(), straight) <= 2e-4);
        CHECK((display_backward(m, q.p_view, q.v) - straight_pixel(q.p_view, q.v)).norm() <= 0.05);
    }
}

TEST_CASE("identity lift matches the straight-line construction") {
    const DisplayModel& m = display_fit("identity").model;
    const OpticalSystem sys = presets::identity_display();
    Gen g(52);
    for (int i = 0; i < 300; ++i) {
        const Supported q = draw_supported(g, m, sys);
        LiftState s;
        const LiftResult r = lift_display(m, q.pixel, q.p_view, s);
        CHECK((r.solution - straight_base(q.pixel, q.p_view, 2.0)).norm() <= 1e-6);
        CHECK(r.residual <= 1e-6);
    }
}

TEST_CASE("singlet forward matches the inverted tracer, backward the tracer") {
    const DisplayModel& m = display_fit("singlet").model;
    const OpticalSystem sys = presets::singlet();
    Gen g(53);
    double sum_sq = 0.0;
    int n = 0;
    for (int i = 0; i < 500; ++i) {
        const Supported q = draw_supported(g, m, sys);
        LiftState s;
        const UnitDir v = display_forward(m, q.pixel, q.p_view, s);
        CHECK(angle_between(v.vec(), invert_display_gt(q.pixel, q.p_view, sys).vec()) <= 1e-3);
        const double e = (display_backward(m, q.p_view, q.v) - q.pixel).norm();
        sum_sq += e * e;
        ++n;
    }
    CHECK(std::sqrt(sum_sq / n) <= 0.25);
}

TEST_CASE("viewpoint on the base plane is a fixed point of the lift") {
    const DisplayModel& m = display_fit("singlet").model;
    LiftState s;
    const LiftResult r = lift_display(m, Vec2(40, -25), Vec3(1.0, -1.5, 2.0), s);
    CHECK(r.solution == Vec2(1.0, -1.5));
    CHECK(r.iterations == 0);
    CHECK(r.residual == 0.0);
}

TEST_CASE("fiber invariance of the constructed forward model") {
    for (const char* preset : {"identity", "singlet"}) {
        const DisplayModel& m = display_fit(preset).model;
        Gen g(54);
        for (int i = 0; i < 300; ++i) {
            const Vec2 base = g.in_box(m.bwd, 0);
            const Vec2 pixel = g.vec2(-150, 150);
            const UnitDir fiber = display_intermediate_forward(m, pixel, base);
            const Vec3 foot = chart_to_world(m.base_plane, base);
            LiftState a;
            LiftState b;
            const double t1 = g.uniform(0.5, 4.0);
            const double t2 = g.uniform(4.0, 9.0);
            const UnitDir va = display_forward(m, pixel, foot + t1 * fiber.vec(), a);
            const UnitDir vb = display_forward(m, pixel, foot + t2 * fiber.vec(), b);
            CHECK(angle_between(va.vec(), vb.vec()) <= 1e-9);
        }
    }
}

TEST_CASE("roundtrip and first-order condition") {
    for (const char* preset : {"identity", "singlet"}) {
        const DisplayModel& m = display_fit(preset).model;
        Gen g(55);
        for (int i = 0; i < 500; ++i) {
            const auto q = draw_fiber_query(g, m.bwd, m.base_plane, 1.0, 8.0);
            const Vec2 pixel = display_backward(m, q.p_view, q.v);
            LiftState s;
            LiftResult r;
            const UnitDir v = display_forward(m, pixel, q.p_view, s, {}, &r);
            CHECK(r.gradient_norm <= 1e-8);
            CHECK((display_backward(m, q.p_view, v) - pixel).norm() <= 0.1);
        }
    }
}

TEST_CASE("warm start lowers the median iteration count without moving the answer") {
    const DisplayModel& m = display_fit("singlet").model;
    const OpticalSystem sys = presets::singlet();
    Gen g(56);
    std::vector<int> warm;
    std::vector<int> cold;
    for (int i = 0; i < 100; ++i) {
        const Supported q = draw_supported(g, m, sys);
        // neighbouring query: 0.1 mm away on the panel
        const double phi = g.uniform(0, 2 * M_PI);
        const Vec2 next = q.pixel + (0.1 / kPitch) * Vec2(std::cos(phi), std::sin(phi));
        LiftState shared;
        lift_display(m, q.pixel, q.p_view, shared);
        const LiftResult w = lift_display(m, next, q.p_view, shared);
        LiftState fresh;
        const LiftResult c = lift_display(m, next, q.p_view, fresh);
        CHECK(w.warm_started);
        CHECK_FALSE(c.warm_started);
        CHECK((w.solution - c.solution).norm() <= 1e-9);
        warm.push_back(w.iterations);
        cold.push_back(c.iterations);
    }
    std::sort(warm.begin(), warm.end());
    std::sort(cold.begin(), cold.end());
    MESSAGE("median iterations warm " << warm[50] << " cold " << cold[50]);
    CHECK(warm[50] < cold[50]);
}

TEST_CASE("warm start ignores state from another model") {
    const DisplayModel& a = display_fit("identity").model;
    const DisplayModel& b = display_fit("singlet").model;
    LiftState s;
    lift_display(a, Vec2(10, 10), Vec3(0, 0, 6), s);
    const LiftResult r = lift_display(b, Vec2(10, 10), Vec3(0, 0, 6), s);
    CHECK_FALSE(r.warm_started);
}

TEST_CASE("noisy fits sit at the injected noise floor") {
    const OpticalSystem sys = presets::singlet();
    const SamplingSpec spec;
    const auto clean = collect_display(sys, spec, NoiseSpec{0.0, 1});
    const auto noisy = collect_display(sys, spec, NoiseSpec{0.5, 1});
    REQUIRE(clean.size() == noisy.size());
    const DisplayFit& ref = display_fit("singlet");
    const DisplayFit& f = display_fit("singlet", 0.5);
    double slope_sq = 0.0;
    double pixel_sq = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const Vec2 base = world_to_chart(spec.base_plane, clean.display[i].p_view);
        const Vec2 s_clean = dir_to_chart(clean.display[i].v, spec.base_plane);
        const Vec2 s_noisy = dir_to_chart(noisy.display[i].v, spec.base_plane);
        slope_sq += (s_noisy - s_clean).squaredNorm();
        const Eigen::VectorXd px = ref.model.bwd.eval(Eigen::Vector4d(base.x(), base.y(), s_noisy.x(), s_noisy.y()));
        pixel_sq += (Vec2(px[0], px[1]) - clean.display[i].p_pixel).squaredNorm();
    }
    const double slope_floor = std::sqrt(slope_sq / clean.size());
    const double pixel_floor = std::sqrt(pixel_sq / clean.size());
    MESSAGE("fwd rms " << f.fwd_report.rms_residual << " floor " << slope_floor << "; bwd rms "
                       << f.bwd_report.rms_residual << " floor " << pixel_floor);
    CHECK(f.fwd_report.rms_residual <= 3.0 * slope_floor);
    CHECK(f.fwd_report.rms_residual >= 0.5 * slope_floor);
    CHECK(f.bwd_report.rms_residual <= 3.0 * pixel_floor);
    CHECK(f.fwd_report.rms_residual > ref.fwd_report.rms_residual);
}

TEST_CASE("contract violations") {
    const OpticalSystem sys = presets::identity_display();
    SamplingSpec spec;
    spec.n_u = spec.n_v = 3;
    spec.n_px_u = spec.n_px_v = 5;
    auto data = collect_display(sys, spec, NoiseSpec{});
    const PanelMeta panel = hmdcal::test::panel_meta(sys);
    auto off = data;
    off.display[7].p_view.z() += 0.01;
    CHECK(error_code([&] { fit_display(off, 2, spec.base_plane, panel); }) == ErrorCode::OffPlane);
    auto wrong = data;
    wrong.kind = SystemKind::Seethru;
    CHECK(error_code([&] { fit_display(wrong, 2, spec.base_plane, panel); }) == ErrorCode::InvalidArgument);

    const DisplayModel& m = display_fit("identity").model;
    LiftState s;
    CHECK(error_code([&] { lift_display(m, Vec2(0, 0), Vec3(0, 0, 1.0), s); }) == ErrorCode::WrongSide);
    CHECK(error_code([&] { display_backward(m, Vec3(0, 0, 1.0), UnitDir::unit_z()); }) == ErrorCode::WrongSide);
    CHECK(error_code([&] { display_backward(m, Vec3(0, 0, 6.0), UnitDir(Vec3(1, 0, 1e-8))); }) ==
          ErrorCode::GrazingRay);
}

}
