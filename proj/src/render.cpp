#include "hmdcal/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

namespace hmdcal {

namespace {

bool pixel_in_box(const DisplayModel& dm, const Vec2& p) {
    const auto& box = dm.fwd.input_box();
    return p.x() >= box[0].lo && p.x() <= box[0].hi && p.y() >= box[1].lo && p.y() <= box[1].hi;
}

void render_row(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view, const DotGridScene& scene,
                int row, LiftState& state, const LiftOptions& opts, DisplayImage& img) {
    for (int col = 0; col < img.width; ++col) {
        const auto hit = pixel_world_point(dm, sm, panel_pixel_coords(dm.panel, col, row), p_view, scene.plane,
                                           state, opts);
        if (!hit) {
            continue;
        }
        const Vec3 d = *hit - scene.plane.origin();
        const std::size_t k = img.index(col, row);
        img.value[k] = scene.shade(Vec2(d.dot(scene.plane.u_axis()), d.dot(scene.plane.v_axis())));
        img.valid[k] = 1;
    }
}

void check_panel(const DisplayModel& dm) {
    if (dm.panel.width < 1 || dm.panel.height < 1) {
        fail(ErrorCode::InvalidArgument, "render: display model has no panel size");
    }
}

} // namespace

DisplayImage::DisplayImage(int w, int h)
    : width(w), height(h), value(static_cast<std::size_t>(w) * h, 0.0), valid(static_cast<std::size_t>(w) * h, 0) {}

Vec2 panel_pixel_coords(const PanelMeta& panel, double col, double row) {
    return Vec2(col - (panel.width - 1) / 2.0, row - (panel.height - 1) / 2.0);
}

std::optional<Vec3> pixel_world_point(const DisplayModel& dm, const SeethruModel& sm, const Vec2& p_pixel,
                                      const Vec3& p_view, const ChartedPlane& scene_plane, LiftState& state,
                                      const LiftOptions& opts) {
    if (!pixel_in_box(dm, p_pixel)) {
        return std::nullopt;
    }
    try {
        LiftResult lift;
        const UnitDir v = display_forward(dm, p_pixel, p_view, state, opts, &lift);
        if (lift.extrapolated) {
            return std::nullopt;
        }
        bool extrapolated = false;
        const auto [plus, minus] = seethru_world_ray(sm, p_view, v, &extrapolated);
        if (extrapolated) {
            return std::nullopt;
        }
        const Vec3 dir = minus - plus;
        const double denom = dir.dot(scene_plane.normal());
        if (std::abs(denom) < 1e-12) {
            return std::nullopt;
        }
        const double t = (scene_plane.origin() - plus).dot(scene_plane.normal()) / denom;
        return plus + t * dir;
    } catch (const Error&) {
        return std::nullopt;
    }
}

DisplayImage render_raytraced(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                              const DotGridScene& scene, const RenderOptions& opts) {
    check_panel(dm);
    if (opts.workers < 1) {
        fail(ErrorCode::InvalidArgument, "render_raytraced: workers must be >= 1");
    }
    DisplayImage img(dm.panel.width, dm.panel.height);
    LiftOptions lift = opts.lift;
    lift.use_warm_start = opts.warm_start;
    std::atomic<int> next_row{0};
    auto worker = [&] {
        for (int row = next_row++; row < img.height; row = next_row++) {
            LiftState state;
            render_row(dm, sm, p_view, scene, row, state, lift, img);
        }
    };
    if (opts.workers == 1) {
        worker();
        return img;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < opts.workers; ++i) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    return img;
}

DisplayImage render_raytraced(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                              const DotGridScene& scene, LiftState& state, const LiftOptions& opts) {
    check_panel(dm);
    DisplayImage img(dm.panel.width, dm.panel.height);
    for (int row = 0; row < img.height; ++row) {
        render_row(dm, sm, p_view, scene, row, state, opts, img);
    }
    return img;
}

DisplayImage render_intermediate(const PinholeCamera& raster_cam, const DotGridScene& scene) {
    DisplayImage img(raster_cam.width(), raster_cam.height());
    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            const Ray r = raster_cam.ray_through(Vec2(col, row));
            double t = 0.0;
            if (!intersect_forward(r, scene.plane, t)) {
                continue;
            }
            const Vec3 d = r.at(t) - scene.plane.origin();
            const std::size_t k = img.index(col, row);
            img.value[k] = scene.shade(Vec2(d.dot(scene.plane.u_axis()), d.dot(scene.plane.v_axis())));
            img.valid[k] = 1;
        }
    }
    return img;
}

WarpGrid compute_warp(const DisplayModel& dm, const SeethruModel& sm, const Vec3& p_view,
                      const ChartedPlane& scene_plane, const PinholeCamera& raster_cam, int stride,
                      const LiftOptions& opts) {
    check_panel(dm);
    if (stride < 1) {
        fail(ErrorCode::InvalidArgument, "compute_warp: stride must be >= 1");
    }
    WarpGrid w;
    w.stride = stride;
    w.panel_width = dm.panel.width;
    w.panel_height = dm.panel.height;
    w.nodes_u = (dm.panel.width - 1 + stride - 1) / stride + 1;
    w.nodes_v = (dm.panel.height - 1 + stride - 1) / stride + 1;
    w.target.assign(static_cast<std::size_t>(w.nodes_u) * w.nodes_v, Vec2::Zero());
    w.valid.assign(w.target.size(), 0);
    for (int iv = 0; iv < w.nodes_v; ++iv) {
        LiftState state;
        for (int iu = 0; iu < w.nodes_u; ++iu) {
            const Vec2 px = panel_pixel_coords(dm.panel, iu * stride, iv * stride);
            const auto hit = pixel_world_point(dm, sm, px, p_view, scene_plane, state, opts);
            if (!hit) {
                continue;
            }
            const auto q = raster_cam.project(*hit);
            if (!q) {
                continue;
            }
            w.target[w.index(iu, iv)] = *q;
            w.valid[w.index(iu, iv)] = 1;
        }
    }
    return w;
}

DisplayImage apply_warp(const WarpGrid& warp, const DisplayImage& intermediate) {
    DisplayImage img(warp.panel_width, warp.panel_height);
    for (int row = 0; row < img.height; ++row) {
        const int iv = std::min(row / warp.stride, warp.nodes_v - 2 < 0 ? 0 : warp.nodes_v - 2);
        const double fv = warp.nodes_v > 1 ? static_cast<double>(row - iv * warp.stride) / warp.stride : 0.0;
        for (int col = 0; col < img.width; ++col) {
            const int iu = std::min(col / warp.stride, warp.nodes_u - 2 < 0 ? 0 : warp.nodes_u - 2);
            const double fu = warp.nodes_u > 1 ? static_cast<double>(col - iu * warp.stride) / warp.stride : 0.0;
            const int iu1 = std::min(iu + 1, warp.nodes_u - 1);
            const int iv1 = std::min(iv + 1, warp.nodes_v - 1);
            const std::size_t k00 = warp.index(iu, iv);
            const std::size_t k10 = warp.index(iu1, iv);
            const std::size_t k01 = warp.index(iu, iv1);
            const std::size_t k11 = warp.index(iu1, iv1);
            if (!(warp.valid[k00] && warp.valid[k10] && warp.valid[k01] && warp.valid[k11])) {
                continue;
            }
            const Vec2 q = (1 - fu) * (1 - fv) * warp.target[k00] + fu * (1 - fv) * warp.target[k10] +
                           (1 - fu) * fv * warp.target[k01] + fu * fv * warp.target[k11];
            const long qc = std::lround(q.x());
            const long qr = std::lround(q.y());
            if (qc < 0 || qr < 0 || qc >= intermediate.width || qr >= intermediate.height) {
                continue;
            }
            const int c = static_cast<int>(qc);
            const int r = static_cast<int>(qr);
            if (!intermediate.is_valid(c, r)) {
                continue;
            }
            const std::size_t k = img.index(col, row);
            img.value[k] = intermediate.at(c, r);
            img.valid[k] = 1;
        }
    }
    return img;
}

std::string pgm_bytes(const DisplayImage& img, const std::string& comment) {
    if (comment.find('\n') != std::string::npos) {
        fail(ErrorCode::InvalidArgument, "pgm_bytes: comment must be a single line");
    }
    std::string out = "P5\n";
    if (!comment.empty()) {
        out += "# " + comment + "\n";
    }
    out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.value.size());
    for (std::size_t k = 0; k < img.value.size(); ++k) {
        const double v = img.valid[k] ? std::clamp(img.value[k], 0.0, 1.0) : 0.0;
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
    return out;
}

void write_pgm(const DisplayImage& img, const std::string& path, const std::string& comment) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        fail(ErrorCode::Io, "write_pgm: cannot open " + path);
    }
    const std::string bytes = pgm_bytes(img, comment);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        fail(ErrorCode::Io, "write_pgm: write failed for " + path);
    }
}

} // namespace hmdcal
