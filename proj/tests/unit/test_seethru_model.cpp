#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "../support.hpp"

using namespace hmdcal;
using hmdcal::test::draw_fiber_query;
using hmdcal::test::error_code;
using hmdcal::test::Gen;
using hmdcal::test::seethru_fit;

namespace {

double line_point_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
    const Vec3 d = (b - a).normalized();
    const Vec3 q = p - a;
    return (q - q.dot(d) * d).norm();
}

// Real point at device depth z on the ray the modeled world line represents.
Vec3 real_point_on(const SeethruModel& m, const Vec3& p_view, const UnitDir& v, double z) {
    const auto [plus, minus] = seethru_world_ray(m, p_view, v);
    return plus + ((z - plus.z()) / (minus.z() - plus.z())) * (minus - plus);
}

} // namespace

TEST_SUITE("seethru_model") {

TEST_CASE("identity fit is exact") {
    const SeethruFit& f = seethru_fit("identity");
    CHECK(f.report.rms_residual <= 1e-4);
    CHECK(f.report.n_samples == 18225);
}

TEST_CASE("on-axis symmetry") {
    const SeethruModel& m = seethru_fit("identity").model;
    const auto [plus, minus] = seethru_forward(m, Vec3(0, 0, 6), UnitDir::unit_z());
    CHECK(plus.norm() <= 1e-9);
    CHECK(minus.norm() <= 1e-9);
    LiftState s;
    const UnitDir v = seethru_backward(m, Vec3(0, 0, 6), Vec3(0, 0, 1500), s);
    CHECK(angle_between(v.vec(), Vec3::UnitZ()) <= 1e-9);
}

TEST_CASE("identity forward follows straight lines") {
    const SeethruModel& m = seethru_fit("identity").model;
    Gen g(61);
    for (int i = 0; i < 500; ++i) {
        const auto q = draw_fiber_query(g, m.fwd, m.base_plane, 1.0, 8.0);
        const auto [plus, minus] = seethru_forward(m, q.p_view, q.v);
        for (const auto& [chart, z] : {std::pair{plus, 1000.0}, std::pair{minus, 2000.0}}) {
            const Vec3 hit = q.p_view + ((z - q.p_view.z()) / q.v.z()) * q.v.vec();
            CHECK((chart - Vec2(hit.x(), hit.y())).norm() <= 0.5);
        }
    }
}

TEST_CASE("wedge forward matches the tracer within one arcminute") {
    const SeethruModel& m = seethru_fit("wedge_combiner").model;
    const OpticalSystem sys = presets::wedge_combiner();
    const double arcmin = M_PI / (180.0 * 60.0);
    Gen g(62);
    for (int i = 0; i < 500; ++i) {
        const auto q = draw_fiber_query(g, m.fwd, m.base_plane, 1.0, 8.0);
        Ray exit;
        if (error_code([&] { exit = trace_seethru_exit(q.p_view, q.v, sys); })) {
            continue;
        }
        const auto [plus, minus] = seethru_world_ray(m, q.p_view, q.v);
        CHECK(angle_between(minus - plus, exit.dir.vec()) <= arcmin);
    }
}

TEST_CASE("identity lift matches the straight-line construction") {
    const SeethruModel& m = seethru_fit("identity").model;
    Gen g(63);
    for (int i = 0; i < 300; ++i) {
        const Vec3 view(g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(3, 10));
        const Vec3 real(g.uniform(-200, 200), g.uniform(-200, 200), g.uniform(1000, 2000));
        LiftState s;
        const LiftResult r = lift_seethru(m, view, real, s);
        const Vec3 through = view + ((2.0 - view.z()) / (real - view).z()) * (real - view);
        CHECK((r.solution - Vec2(through.x(), through.y())).norm() <= 1e-6);
        LiftState s2;
        const UnitDir v = seethru_backward(m, view, real, s2);
        CHECK(angle_between(v.vec(), (real - view).normalized()) <= 1e-6);
    }
}

TEST_CASE("collinear configuration lifts to the orthogonal projection") {
    const SeethruModel& m = seethru_fit("identity").model;
    LiftState s;
    const LiftResult r = lift_seethru(m, Vec3(1, 2, 6), Vec3(1, 2, 1500), s);
    CHECK((r.solution - Vec2(1, 2)).norm() <= 1e-9);
}

TEST_CASE("closed loop through the model and through the tracer") {
    const OpticalSystem wedge = presets::wedge_combiner();
    for (const char* preset : {"identity", "wedge_combiner"}) {
        const SeethruModel& m = seethru_fit(preset).model;
        Gen g(64);
        for (int i = 0; i < 300; ++i) {
            const auto q = draw_fiber_query(g, m.fwd, m.base_plane, 1.0, 8.0);
            const Vec3 real = real_point_on(m, q.p_view, q.v, 1000.0);
            LiftState s;
            LiftResult r;
            const UnitDir v = seethru_backward(m, q.p_view, real, s, seethru_lift_defaults(), &r);
            CHECK(r.gradient_norm <= 1e-8);
            const auto [plus, minus] = seethru_world_ray(m, q.p_view, v);
            CHECK(line_point_distance(plus, minus, real) <= 1.0);
        }
    }
    // the tracer closes the loop for the wedge model
    const SeethruModel& m = seethru_fit("wedge_combiner").model;
    Gen g(65);
    for (int i = 0; i < 300; ++i) {
        const auto q = draw_fiber_query(g, m.fwd, m.base_plane, 1.0, 8.0);
        Ray exit;
        if (error_code([&] { exit = trace_seethru_exit(q.p_view, q.v, wedge); })) {
            continue;
        }
        double t = 0.0;
        REQUIRE(intersect_forward(exit, ChartedPlane::at_z(1000.0), t));
        const Vec3 real = exit.at(t);
        LiftState s;
        const UnitDir v = seethru_backward(m, q.p_view, real, s);
        const Ray back = trace_seethru_exit(q.p_view, v, wedge);
        REQUIRE(intersect_forward(back, ChartedPlane::at_z(1000.0), t));
        CHECK((back.at(t) - real).norm() <= 1.0);
    }
}

TEST_CASE("fiber invariance of the constructed forward model") {
    for (const char* preset : {"identity", "wedge_combiner"}) {
        const SeethruModel& m = seethru_fit(preset).model;
        Gen g(66);
        for (int i = 0; i < 300; ++i) {
            const Vec2 base = g.in_box(m.fwd, 0);
            const UnitDir v = chart_to_dir(g.in_box(m.fwd, 2), m.base_plane);
            const Vec3 foot = chart_to_world(m.base_plane, base);
            const auto [pa, ma] = seethru_forward(m, foot + g.uniform(0.5, 4) * v.vec(), v);
            const auto [pb, mb] = seethru_forward(m, foot + g.uniform(4, 9) * v.vec(), v);
            CHECK((pa - pb).norm() <= 1e-9);
            CHECK((ma - mb).norm() <= 1e-9);
        }
    }
}

TEST_CASE("warm start on a 0.1 mm perturbed real point") {
    const SeethruModel& m = seethru_fit("wedge_combiner").model;
    Gen g(67);
    std::vector<int> warm;
    std::vector<int> cold;
    for (int i = 0; i < 100; ++i) {
        const auto q = draw_fiber_query(g, m.fwd, m.base_plane, 1.0, 8.0);
        const Vec3 real = real_point_on(m, q.p_view, q.v, g.uniform(1000, 2000));
        const Vec3 moved = real + 0.1 * g.vec3(-1, 1).normalized();
        LiftState shared;
        lift_seethru(m, q.p_view, real, shared);
        const LiftResult w = lift_seethru(m, q.p_view, moved, shared);
        LiftState fresh;
        const LiftResult c = lift_seethru(m, q.p_view, moved, fresh);
        CHECK((w.solution - c.solution).norm() <= 1e-9);
        warm.push_back(w.iterations);
        cold.push_back(c.iterations);
    }
    std::sort(warm.begin(), warm.end());
    std::sort(cold.begin(), cold.end());
    MESSAGE("median iterations warm " << warm[50] << " cold " << cold[50]);
    CHECK(warm[50] < cold[50]);
}

TEST_CASE("degenerate and invalid inputs") {
    const SeethruModel& m = seethru_fit("identity").model;
    LiftState s;
    CHECK(error_code([&] { lift_seethru(m, Vec3(0.5, 0.5, 2.0), Vec3(0, 0, 1500), s); }) ==
          ErrorCode::DegenerateDirection);
    CHECK(error_code([&] { lift_seethru(m, Vec3(0, 0, 1.0), Vec3(0, 0, 1500), s); }) == ErrorCode::WrongSide);
    CHECK(error_code([&] { seethru_forward(m, Vec3(0, 0, 1.0), UnitDir::unit_z()); }) == ErrorCode::WrongSide);

    const OpticalSystem sys = presets::identity_seethru();
    SamplingSpec spec;
    spec.n_u = spec.n_v = 3;
    spec.n_px_u = spec.n_px_v = 5;
    const auto data = collect_seethru(sys, spec, NoiseSpec{});
    auto missing = data;
    missing.seethru[4].p_minus = Vec2(NAN, NAN);
    CHECK(error_code([&] { fit_seethru(missing, 2, spec.base_plane, *sys.world_planes); }) ==
          ErrorCode::InvalidArgument);
    auto off = data;
    off.seethru[0].p_view.z() = 3.0;
    CHECK(error_code([&] { fit_seethru(off, 2, spec.base_plane, *sys.world_planes); }) == ErrorCode::OffPlane);
}

TEST_CASE("fit residual grows monotonically with noise") {
    double prev = -1.0;
    for (double sigma : {0.0, 0.25, 0.5, 1.0}) {
        const double rms = seethru_fit("wedge_combiner", sigma).report.rms_residual;
        MESSAGE("sigma " << sigma << " rms " << rms);
        CHECK(rms >= prev);
        prev = rms;
    }
}

}
