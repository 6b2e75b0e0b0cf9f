#include "hmdcal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hmdcal {

namespace {

struct Query {
    Vec2 base;
    Vec2 slope;
    double height = 0.0;
    double depth = 0.0;
};

double lerp(const Vec2& range, double u) { return range.x() + (range.y() - range.x()) * u; }

// All random draws happen up front so dropped queries never shift the stream.
std::vector<Query> draw_queries(const EvalSpec& spec, const std::vector<InputRange>& box) {
    if (spec.n_queries < 1 || spec.height_range.x() < 0.0 || spec.height_range.y() < spec.height_range.x()) {
        fail(ErrorCode::InvalidArgument, "EvalSpec: need n_queries >= 1 and 0 <= height_lo <= height_hi");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Query> out(static_cast<std::size_t>(spec.n_queries));
    for (Query& q : out) {
        const double a = u01(rng);
        const double b = u01(rng);
        const double c = u01(rng);
        const double d = u01(rng);
        const double h = u01(rng);
        const double z = u01(rng);
        q.base = Vec2(box[0].lo + (box[0].hi - box[0].lo) * a, box[1].lo + (box[1].hi - box[1].lo) * b);
        q.slope = Vec2(box[2].lo + (box[2].hi - box[2].lo) * c, box[3].lo + (box[3].hi - box[3].lo) * d);
        q.height = lerp(spec.height_range, h);
        q.depth = lerp(spec.depth_range, z);
    }
    return out;
}

Vec3 query_view(const ChartedPlane& base_plane, const Query& q, const UnitDir& v) {
    return chart_to_world(base_plane, q.base) + (q.height / v.dot(base_plane.normal())) * v.vec();
}

bool in_range(const InputRange& r, double x) { return x >= r.lo && x <= r.hi; }

nlohmann::json vec_json(const Vec3& p) { return nlohmann::json::array({p.x(), p.y(), p.z()}); }

} // namespace

std::string to_string(MetricKind k) {
    switch (k) {
    case MetricKind::PixelOffset_px: return "PixelOffset_px";
    case MetricKind::AngularDiscrepancy_rad: return "AngularDiscrepancy_rad";
    case MetricKind::Misalignment_campx: return "Misalignment_campx";
    }
    return "unknown";
}

EvalReport summarize(MetricKind metric, std::vector<double> values, int dropped, nlohmann::json config) {
    if (values.empty()) {
        fail(ErrorCode::TooManyDropped, "summarize: no valid samples for " + to_string(metric));
    }
    EvalReport r;
    r.metric = metric;
    r.count = static_cast<int>(values.size());
    r.dropped = dropped;
    r.config = std::move(config);
    double sum = 0.0;
    double sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
        r.max = std::max(r.max, v);
    }
    r.mean = sum / r.count;
    r.rms = std::sqrt(sq / r.count);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
    r.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    r.values = std::move(values);
    return r;
}

nlohmann::json EvalSpec::to_json() const {
    return {{"n_queries", n_queries},
            {"seed", seed},
            {"height_range", {height_range.x(), height_range.y()}},
            {"depth_range", {depth_range.x(), depth_range.y()}}};
}

DisplayEval eval_display(const DisplayModel& m, const OpticalSystem& sys, const EvalSpec& spec) {
    const std::vector<Query> queries = draw_queries(spec, m.bwd.input_box());
    const auto& fbox = m.fwd.input_box();
    std::vector<double> bwd;
    std::vector<double> fwd;
    int bwd_dropped = 0;
    int fwd_dropped = 0;
    for (const Query& q : queries) {
        const UnitDir v = chart_to_dir(q.slope, m.base_plane);
        const Vec3 p_view = query_view(m.base_plane, q, v);
        Vec2 gt_pixel;
        try {
            gt_pixel = trace_display_gt(p_view, v, sys);
        } catch (const Error&) {
            ++bwd_dropped;
            ++fwd_dropped;
            continue;
        }
        bwd.push_back((display_backward(m, p_view, v) - gt_pixel).norm());

        if (!in_range(fbox[0], gt_pixel.x()) || !in_range(fbox[1], gt_pixel.y())) {
            ++fwd_dropped;
            continue;
        }
        try {
            LiftState state;
            LiftResult lift;
            const UnitDir v_model = display_forward(m, gt_pixel, p_view, state, {}, &lift);
            if (lift.extrapolated) {
                ++fwd_dropped;
                continue;
            }
            const UnitDir v_gt = invert_display_gt(gt_pixel, p_view, sys);
            fwd.push_back(angle_between(v_model.vec(), v_gt.vec()));
        } catch (const Error&) {
            ++fwd_dropped;
        }
    }
    nlohmann::json cfg = {{"system", sys.name}, {"eval", spec.to_json()}};
    cfg["metric"] = "backward";
    DisplayEval out;
    out.backward = summarize(MetricKind::PixelOffset_px, std::move(bwd), bwd_dropped, cfg);
    cfg["metric"] = "forward";
    out.forward = summarize(MetricKind::AngularDiscrepancy_rad, std::move(fwd), fwd_dropped, cfg);
    return out;
}

SeethruEval eval_seethru(const SeethruModel& m, const OpticalSystem& sys, const EvalSpec& spec) {
    const std::vector<Query> queries = draw_queries(spec, m.fwd.input_box());
    std::vector<double> fwd;
    std::vector<double> bwd;
    int fwd_dropped = 0;
    int bwd_dropped = 0;
    for (const Query& q : queries) {
        const UnitDir v = chart_to_dir(q.slope, m.base_plane);
        const Vec3 p_view = query_view(m.base_plane, q, v);
        Ray exit;
        try {
            exit = trace_seethru_exit(p_view, v, sys);
        } catch (const Error&) {
            ++fwd_dropped;
            ++bwd_dropped;
            continue;
        }
        const auto [plus, minus] = seethru_world_ray(m, p_view, v);
        fwd.push_back(angle_between(minus - plus, exit.dir.vec()));

        double t = 0.0;
        if (!intersect_forward(exit, ChartedPlane::at_z(q.depth), t)) {
            ++bwd_dropped;
            continue;
        }
        const Vec3 p_real = exit.at(t);
        try {
            LiftState state;
            LiftResult lift;
            const UnitDir v_model = seethru_backward(m, p_view, p_real, state, seethru_lift_defaults(), &lift);
            if (lift.extrapolated) {
                ++bwd_dropped;
                continue;
            }
            const UnitDir v_gt = invert_seethru_gt(p_view, p_real, sys);
            bwd.push_back(angle_between(v_model.vec(), v_gt.vec()));
        } catch (const Error&) {
            ++bwd_dropped;
        }
    }
    nlohmann::json cfg = {{"system", sys.name}, {"eval", spec.to_json()}};
    cfg["metric"] = "forward";
    SeethruEval out;
    out.forward = summarize(MetricKind::AngularDiscrepancy_rad, std::move(fwd), fwd_dropped, cfg);
    cfg["metric"] = "backward";
    out.backward = summarize(MetricKind::AngularDiscrepancy_rad, std::move(bwd), bwd_dropped, cfg);
    return out;
}

FiberInvariance eval_fiber_invariance(const DisplayModel& planar, const VolumetricDisplayModel& volumetric,
                                      const OpticalSystem& sys, int n_fibers, std::uint64_t seed) {
    const auto& box = planar.fwd.input_box();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    FiberInvariance out;
    for (int i = 0; i < n_fibers; ++i) {
        double u[4];
        for (double& x : u) {
            x = u01(rng);
        }
        const Vec2 pixel(box[0].lo + (box[0].hi - box[0].lo) * u[0], box[1].lo + (box[1].hi - box[1].lo) * u[1]);
        const Vec2 base(box[2].lo + (box[2].hi - box[2].lo) * u[2], box[3].lo + (box[3].hi - box[3].lo) * u[3]);
        const Vec3 foot = chart_to_world(planar.base_plane, base);
        try {
            const UnitDir fiber = display_intermediate_forward(planar, pixel, base);
            const UnitDir traced = invert_display_gt(pixel, foot, sys);
            LiftState s_near;
            LiftState s_far;
            const UnitDir a = display_forward(planar, pixel, foot + 2.0 * fiber.vec(), s_near);
            const UnitDir b = display_forward(planar, pixel, foot + 8.0 * fiber.vec(), s_far);
            const UnitDir va = volumetric_forward(volumetric, pixel, foot + 2.0 * traced.vec());
            const UnitDir vb = volumetric_forward(volumetric, pixel, foot + 8.0 * traced.vec());
            out.planar = std::max(out.planar, angle_between(a.vec(), b.vec()));
            out.volumetric = std::max(out.volumetric, angle_between(va.vec(), vb.vec()));
            ++out.count;
        } catch (const Error&) {
            // pixel not visible from this base point on the traced system
        }
    }
    return out;
}

double eval_fiber_invariance(const SeethruModel& m, int n_fibers, std::uint64_t seed) {
    const auto& box = m.fwd.input_box();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < n_fibers; ++i) {
        double u[4];
        for (double& x : u) {
            x = u01(rng);
        }
        const Vec2 base(box[0].lo + (box[0].hi - box[0].lo) * u[0], box[1].lo + (box[1].hi - box[1].lo) * u[1]);
        const Vec2 slope(box[2].lo + (box[2].hi - box[2].lo) * u[2], box[3].lo + (box[3].hi - box[3].lo) * u[3]);
        const UnitDir v = chart_to_dir(slope, m.base_plane);
        const Vec3 foot = chart_to_world(m.base_plane, base);
        const auto [pa, ma] = seethru_world_ray(m, foot + 2.0 * v.vec(), v);
        const auto [pb, mb] = seethru_world_ray(m, foot + 8.0 * v.vec(), v);
        worst = std::max(worst, angle_between(ma - pa, mb - pb));
    }
    return worst;
}

std::vector<DotBlob> find_dots(const DisplayImage& img) {
    std::vector<int> label(img.value.size(), -1);
    std::vector<DotBlob> out;
    std::vector<std::pair<int, int>> stack;
    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            const std::size_t seed = img.index(col, row);
            if (label[seed] >= 0 || !img.valid[seed] || img.value[seed] <= 0.5) {
                continue;
            }
            label[seed] = 1;
            stack.assign(1, {col, row});
            bool rejected = false;
            double sx = 0.0;
            double sy = 0.0;
            int area = 0;
            while (!stack.empty()) {
                const auto [c, r] = stack.back();
                stack.pop_back();
                sx += c;
                sy += r;
                ++area;
                if (c == 0 || r == 0 || c == img.width - 1 || r == img.height - 1) {
                    rejected = true;
                }
                const int nb[4][2] = {{c - 1, r}, {c + 1, r}, {c, r - 1}, {c, r + 1}};
                for (const auto& n : nb) {
                    if (n[0] < 0 || n[1] < 0 || n[0] >= img.width || n[1] >= img.height) {
                        continue;
                    }
                    const std::size_t k = img.index(n[0], n[1]);
                    if (!img.valid[k]) {
                        rejected = true;
                        continue;
                    }
                    if (label[k] < 0 && img.value[k] > 0.5) {
                        label[k] = 1;
                        stack.emplace_back(n[0], n[1]);
                    }
                }
            }
            if (!rejected) {
                out.push_back(DotBlob{Vec2(sx / area, sy / area), area});
            }
        }
    }
    return out;
}

DisplayImage capture_real(const PinholeCamera& cam, const OpticalSystem& sys_seethru, const DotGridScene& scene) {
    DisplayImage img(cam.width(), cam.height());
    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            try {
                const Ray r = cam.ray_through(Vec2(col, row));
                const Ray exit = trace_seethru_exit(r.origin, r.dir, sys_seethru);
                double t = 0.0;
                if (!intersect_forward(exit, scene.plane, t)) {
                    continue;
                }
                const Vec3 d = exit.at(t) - scene.plane.origin();
                const std::size_t k = img.index(col, row);
                img.value[k] = scene.shade(Vec2(d.dot(scene.plane.u_axis()), d.dot(scene.plane.v_axis())));
                img.valid[k] = 1;
            } catch (const Error&) {
                // ray leaves the optics: pixel stays invalid
            }
        }
    }
    return img;
}

DisplayImage capture_display(const PinholeCamera& cam, const OpticalSystem& sys_display, const DisplayImage& shown,
                             const PanelMeta& panel) {
    DisplayImage img(cam.width(), cam.height());
    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            try {
                const Ray r = cam.ray_through(Vec2(col, row));
                const Vec2 px = trace_display_gt(r.origin, r.dir, sys_display);
                const long pc = std::lround(px.x() + (panel.width - 1) / 2.0);
                const long pr = std::lround(px.y() + (panel.height - 1) / 2.0);
                if (pc < 0 || pr < 0 || pc >= shown.width || pr >= shown.height) {
                    continue;
                }
                const int c = static_cast<int>(pc);
                const int rr = static_cast<int>(pr);
                if (!shown.is_valid(c, rr)) {
                    continue;
                }
                const std::size_t k = img.index(col, row);
                img.value[k] = shown.at(c, rr);
                img.valid[k] = 1;
            } catch (const Error&) {
                // ray misses the panel
            }
        }
    }
    return img;
}

EvalReport verify_end_to_end(const DisplayModel& dm, const SeethruModel& sm, const OpticalSystem& sys_display,
                             const OpticalSystem& sys_seethru, const DotGridScene& scene,
                             const std::vector<Vec3>& viewpoints, const VerifyOptions& opts) {
    if (viewpoints.empty()) {
        fail(ErrorCode::InvalidArgument, "verify_end_to_end: no viewpoints");
    }
    scene.validate();
    std::vector<double> values;
    int unmatched = 0;
    nlohmann::json views = nlohmann::json::array();
    for (const Vec3& vp : viewpoints) {
        views.push_back(vec_json(vp));
        const PinholeCamera cam = opts.camera.moved_to(vp);
        const DisplayImage shown = render_raytraced(dm, sm, vp, scene, opts.render);
        const std::vector<DotBlob> virt = find_dots(capture_display(cam, sys_display, shown, dm.panel));
        const std::vector<DotBlob> real = find_dots(capture_real(cam, sys_seethru, scene));

        auto nearest = [&](const Vec2& p, const std::vector<DotBlob>& set, int& close) {
            std::size_t best = set.size();
            double best_d = 0.0;
            close = 0;
            for (std::size_t j = 0; j < set.size(); ++j) {
                const double d = (set[j].centroid - p).norm();
                if (d <= opts.ambiguity_px) {
                    ++close;
                }
                if (best == set.size() || d < best_d) {
                    best = j;
                    best_d = d;
                }
            }
            return best;
        };

        int pairs = 0;
        std::vector<bool> real_used(real.size(), false);
        for (std::size_t i = 0; i < virt.size(); ++i) {
            int close = 0;
            const std::size_t j = nearest(virt[i].centroid, real, close);
            if (close > 1) {
                fail(ErrorCode::UnmatchedDots, "verify_end_to_end: ambiguous match for a displayed dot");
            }
            if (j == real.size()) {
                ++unmatched;
                continue;
            }
            int back_close = 0;
            const std::size_t back = nearest(real[j].centroid, virt, back_close);
            if (back_close > 1) {
                fail(ErrorCode::UnmatchedDots, "verify_end_to_end: ambiguous match for a real dot");
            }
            if (back != i) {
                ++unmatched;
                continue;
            }
            real_used[j] = true;
            values.push_back((virt[i].centroid - real[j].centroid).norm());
            ++pairs;
        }
        unmatched += static_cast<int>(std::count(real_used.begin(), real_used.end(), false));
        if (pairs == 0) {
            fail(ErrorCode::UnmatchedDots, "verify_end_to_end: no dot pairs at a viewpoint");
        }
    }
    nlohmann::json cfg = {{"display_system", sys_display.name},
                          {"seethru_system", sys_seethru.name},
                          {"viewpoints", views},
                          {"n_dots", scene.centers.size()},
                          {"camera_focal_px", opts.camera.focal_px()},
                          {"camera_size", {opts.camera.width(), opts.camera.height()}}};
    return summarize(MetricKind::Misalignment_campx, std::move(values), unmatched, cfg);
}

std::vector<Vec3> default_verify_viewpoints() {
    return {Vec3(0.0, 0.0, 6.0), Vec3(2.0, 1.0, 5.0), Vec3(-2.0, -1.5, 8.0)};
}

} // namespace hmdcal
