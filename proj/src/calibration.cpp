#include "hmdcal/calibration.hpp"

#include <random>
#include <sstream>

namespace hmdcal {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    }
    return out;
}

// Independent stream per (viewpoint, placement) so collection order or
// parallel splitting never changes the draws.
std::mt19937_64 stream_for(std::uint64_t seed, std::size_t viewpoint, unsigned placement) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(viewpoint), placement};
    return std::mt19937_64(seq);
}

Vec2 perturbation(std::mt19937_64& rng, double sigma) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double a = n01(rng);
    const double b = n01(rng);
    return sigma * Vec2(a, b);
}

void check_dropped(std::size_t kept, int dropped, const char* what) {
    if (static_cast<double>(dropped) > 0.5 * static_cast<double>(kept + static_cast<std::size_t>(dropped))) {
        std::ostringstream msg;
        msg << what << ": " << dropped << " of " << kept + static_cast<std::size_t>(dropped) << " rays dropped";
        fail(ErrorCode::TooManyDropped, msg.str());
    }
}

CorrespondenceSet collect_display_impl(const OpticalSystem& sys, const SamplingSpec& spec, const NoiseSpec& noise) {
    if (sys.kind != SystemKind::Display) {
        fail(ErrorCode::InvalidArgument, "collect_display: not a display system");
    }
    if (noise.sigma_px < 0.0) {
        fail(ErrorCode::InvalidArgument, "collect_display: sigma_px must be >= 0");
    }
    spec.validate();
    CorrespondenceSet out;
    out.kind = SystemKind::Display;
    out.provenance = Provenance{spec, noise, sys.name, 0, sys.panel, std::nullopt};
    const std::vector<Vec3> views = spec.viewpoints();
    const std::vector<Vec2> pixels = spec.camera_pixels();
    out.display.reserve(views.size() * pixels.size());
    for (std::size_t vi = 0; vi < views.size(); ++vi) {
        const PinholeCamera cam = spec.camera.moved_to(views[vi]);
        auto rng = stream_for(noise.seed, vi, 0);
        for (const Vec2& q : pixels) {
            const Vec2 dq = perturbation(rng, noise.sigma_px);
            const Ray nominal = cam.camera_ray(q);
            try {
                const Vec2 p_pixel = trace_display_gt(nominal.origin, nominal.dir, sys);
                out.display.push_back(DisplaySample{views[vi], p_pixel, cam.ray_through(q + dq).dir});
            } catch (const Error&) {
                ++out.provenance.dropped;
            }
        }
    }
    check_dropped(out.display.size(), out.provenance.dropped, "collect_display");
    return out;
}

} // namespace

void SamplingSpec::validate() const {
    const bool counts_ok = n_u >= 2 && n_v >= 2 && n_px_u >= 2 && n_px_v >= 2 &&
                           (mode == SamplingMode::Planar || n_z >= 2);
    const bool ranges_ok = u_range.x() < u_range.y() && v_range.x() < v_range.y() &&
                           (mode == SamplingMode::Planar || z_range.x() < z_range.y());
    if (!counts_ok || !ranges_ok) {
        fail(ErrorCode::InvalidArgument, "SamplingSpec: need >= 2 samples per axis and ordered ranges");
    }
}

std::vector<Vec3> SamplingSpec::viewpoints() const {
    std::vector<Vec3> out;
    const auto us = linspace(u_range.x(), u_range.y(), n_u);
    const auto vs = linspace(v_range.x(), v_range.y(), n_v);
    if (mode == SamplingMode::Planar) {
        for (double v : vs) {
            for (double u : us) {
                out.push_back(chart_to_world(base_plane, Vec2(u, v)));
            }
        }
        return out;
    }
    for (double z : linspace(z_range.x(), z_range.y(), n_z)) {
        for (double v : vs) {
            for (double u : us) {
                out.emplace_back(u, v, z);
            }
        }
    }
    return out;
}

std::vector<Vec2> SamplingSpec::camera_pixels() const {
    std::vector<Vec2> out;
    for (double y : linspace(0.0, camera.height() - 1.0, n_px_v)) {
        for (double x : linspace(0.0, camera.width() - 1.0, n_px_u)) {
            out.emplace_back(x, y);
        }
    }
    return out;
}

CorrespondenceSet collect_display(const OpticalSystem& sys, const SamplingSpec& spec, const NoiseSpec& noise) {
    if (spec.mode != SamplingMode::Planar) {
        fail(ErrorCode::InvalidArgument, "collect_display: sampling spec must be planar");
    }
    return collect_display_impl(sys, spec, noise);
}

CorrespondenceSet collect_display_volumetric(const OpticalSystem& sys, const SamplingSpec& spec,
                                             const NoiseSpec& noise) {
    if (spec.mode != SamplingMode::Volumetric) {
        fail(ErrorCode::InvalidArgument, "collect_display_volumetric: sampling spec must be volumetric");
    }
    return collect_display_impl(sys, spec, noise);
}

CorrespondenceSet collect_seethru(const OpticalSystem& sys, const SamplingSpec& spec, const NoiseSpec& noise) {
    if (sys.kind != SystemKind::Seethru || !sys.world_planes) {
        fail(ErrorCode::InvalidArgument, "collect_seethru: not a see-through system");
    }
    if (spec.mode != SamplingMode::Planar) {
        fail(ErrorCode::InvalidArgument, "collect_seethru: sampling spec must be planar");
    }
    if (noise.sigma_px < 0.0) {
        fail(ErrorCode::InvalidArgument, "collect_seethru: sigma_px must be >= 0");
    }
    spec.validate();
    CorrespondenceSet out;
    out.kind = SystemKind::Seethru;
    out.provenance = Provenance{spec, noise, sys.name, 0, std::nullopt, sys.world_planes};
    const std::vector<Vec3> views = spec.viewpoints();
    const std::vector<Vec2> pixels = spec.camera_pixels();
    const auto& [plane_a, plane_b] = *sys.world_planes;

    // target point seen at a (perturbed) camera pixel for one placement
    auto observe = [&](const PinholeCamera& cam, const Vec2& px, const ChartedPlane& target) {
        const Ray r = cam.ray_through(px);
        const Ray exit = trace_seethru_exit(r.origin, r.dir, sys);
        double t = 0.0;
        if (!intersect_forward(exit, target, t)) {
            fail(ErrorCode::RayLost, "collect_seethru: exit ray misses the target plane");
        }
        const Vec3 d = exit.at(t) - target.origin();
        return Vec2(d.dot(target.u_axis()), d.dot(target.v_axis()));
    };

    out.seethru.reserve(views.size() * pixels.size());
    for (std::size_t vi = 0; vi < views.size(); ++vi) {
        const PinholeCamera cam = spec.camera.moved_to(views[vi]);
        auto rng_a = stream_for(noise.seed, vi, 1);
        auto rng_b = stream_for(noise.seed, vi, 2);
        for (const Vec2& q : pixels) {
            const Vec2 dq_a = perturbation(rng_a, noise.sigma_px);
            const Vec2 dq_b = perturbation(rng_b, noise.sigma_px);
            try {
                const Vec2 p_plus = observe(cam, q + dq_a, plane_a);
                const Vec2 p_minus = observe(cam, q + dq_b, plane_b);
                out.seethru.push_back(SeethruSample{views[vi], cam.camera_ray(q).dir, p_plus, p_minus});
            } catch (const Error&) {
                ++out.provenance.dropped;
            }
        }
    }
    check_dropped(out.seethru.size(), out.provenance.dropped, "collect_seethru");
    return out;
}

VolumetricFit fit_display_volumetric(const CorrespondenceSet& data, int degree, const FitOptions& opts) {
    if (data.kind != SystemKind::Display) {
        fail(ErrorCode::InvalidArgument, "fit_display_volumetric: dataset is not a display dataset");
    }
    const auto n = static_cast<Eigen::Index>(data.display.size());
    Eigen::MatrixXd x(n, 5);
    Eigen::MatrixXd y(n, 2);
    const ChartedPlane frame = ChartedPlane::at_z(0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const DisplaySample& s = data.display[static_cast<std::size_t>(i)];
        const Vec2 slope = dir_to_chart(s.v, frame);
        x.row(i) << s.p_pixel.x(), s.p_pixel.y(), s.p_view.x(), s.p_view.y(), s.p_view.z();
        y.row(i) << slope.x(), slope.y();
    }
    auto [poly, report] = fit_poly(x, y, degree, opts);
    return VolumetricFit{VolumetricDisplayModel{std::move(poly)}, report};
}

UnitDir volumetric_forward(const VolumetricDisplayModel& m, const Vec2& p_pixel, const Vec3& p_view) {
    Eigen::VectorXd x(5);
    x << p_pixel.x(), p_pixel.y(), p_view.x(), p_view.y(), p_view.z();
    const Eigen::VectorXd s = m.poly.eval(x);
    return chart_to_dir(Vec2(s[0], s[1]), ChartedPlane::at_z(0.0));
}

} // namespace hmdcal
