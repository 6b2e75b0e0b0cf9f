#pragma once

// Shared test helpers: a seeded generator for property tests and a cache of
// models fitted on the default planar grid, so each suite fits once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>

#include "hmdcal/calibration.hpp"
#include "hmdcal/display_model.hpp"
#include "hmdcal/error.hpp"
#include "hmdcal/geometry.hpp"
#include "hmdcal/optics.hpp"
#include "hmdcal/polyfit.hpp"
#include "hmdcal/seethru_model.hpp"

namespace hmdcal::test {

/// Code of the Error thrown by f, or empty when f returns normally.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Vec2 vec2(double lo, double hi) { return Vec2(uniform(lo, hi), uniform(lo, hi)); }
    Vec3 vec3(double lo, double hi) { return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)); }

    /// Point of dims (first, first + 1) of a model's input box.
    Vec2 in_box(const PolyModel& m, int first) {
        const auto& b = m.input_box();
        return Vec2(uniform(b[first].lo, b[first].hi), uniform(b[first + 1].lo, b[first + 1].hi));
    }

    /// Forward-hemisphere direction with slopes up to max_slope on each axis.
    UnitDir forward_dir(double max_slope) { return UnitDir(Vec3(uniform(-max_slope, max_slope),
                                                                uniform(-max_slope, max_slope), 1.0)); }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// A viewpoint on the fiber of (base, slope), height mm above the base plane.
struct FiberQuery {
    Vec2 base;
    UnitDir v;
    Vec3 p_view;
};

/// base and slope drawn from dims 0..3 of a (base, slope)-input model.
inline FiberQuery draw_fiber_query(Gen& g, const PolyModel& base_slope_model, const ChartedPlane& plane,
                                   double h_lo, double h_hi) {
    FiberQuery q;
    q.base = g.in_box(base_slope_model, 0);
    q.v = chart_to_dir(g.in_box(base_slope_model, 2), plane);
    const double h = g.uniform(h_lo, h_hi);
    q.p_view = chart_to_world(plane, q.base) + (h / q.v.dot(plane.normal())) * q.v.vec();
    return q;
}

inline PanelMeta panel_meta(const OpticalSystem& sys) {
    return PanelMeta{sys.panel->pitch_mm, sys.panel->width, sys.panel->height};
}

inline const DisplayFit& display_fit(const std::string& preset, double sigma = 0.0, int degree = 4) {
    static std::map<std::tuple<std::string, double, int>, DisplayFit> cache;
    const auto key = std::make_tuple(preset, sigma, degree);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const OpticalSystem sys = presets::by_name(preset, SystemKind::Display);
        const SamplingSpec spec;
        const auto data = collect_display(sys, spec, NoiseSpec{sigma, 1});
        it = cache.emplace(key, fit_display(data, degree, spec.base_plane, panel_meta(sys))).first;
    }
    return it->second;
}

inline const SeethruFit& seethru_fit(const std::string& preset, double sigma = 0.0, int degree = 4) {
    static std::map<std::tuple<std::string, double, int>, SeethruFit> cache;
    const auto key = std::make_tuple(preset, sigma, degree);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const OpticalSystem sys = presets::by_name(preset, SystemKind::Seethru);
        const SamplingSpec spec;
        const auto data = collect_seethru(sys, spec, NoiseSpec{sigma, 1});
        it = cache.emplace(key, fit_seethru(data, degree, spec.base_plane, *sys.world_planes)).first;
    }
    return it->second;
}

inline const VolumetricFit& volumetric_fit(const std::string& preset, int degree = 4) {
    static std::map<std::pair<std::string, int>, VolumetricFit> cache;
    const auto key = std::make_pair(preset, degree);
    auto it = cache.find(key);
    if (it == cache.end()) {
        SamplingSpec spec;
        spec.mode = SamplingMode::Volumetric;
        const auto data = collect_display_volumetric(presets::by_name(preset, SystemKind::Display), spec, NoiseSpec{});
        it = cache.emplace(key, fit_display_volumetric(data, degree)).first;
    }
    return it->second;
}

/// Relative Frobenius error of an analytic Jacobian against central
/// differences with step h_frac of each input's box width.
inline double jacobian_fd_error(const PolyModel& m, const Eigen::VectorXd& x, double h_frac = 1e-6) {
    const Eigen::MatrixXd ja = m.jacobian(x);
    Eigen::MatrixXd jf(m.out_dim(), m.in_dim());
    for (int k = 0; k < m.in_dim(); ++k) {
        const double h = h_frac * (m.input_box()[k].hi - m.input_box()[k].lo);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[k] += h;
        xm[k] -= h;
        jf.col(k) = (m.eval(xp) - m.eval(xm)) / (2.0 * h);
    }
    const double scale = std::max(ja.norm(), 1e-300);
    return (ja - jf).norm() / scale;
}

} // namespace hmdcal::test
