#include "hmdcal/io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

namespace hmdcal {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
    }
}

const char* kind_name(SystemKind k) { return k == SystemKind::Display ? "display" : "seethru"; }

SystemKind kind_from(const std::string& s) {
    if (s == "display") {
        return SystemKind::Display;
    }
    if (s == "seethru") {
        return SystemKind::Seethru;
    }
    fail(ErrorCode::Parse, "unknown system kind '" + s + "'");
}

json box_to_json(const std::vector<InputRange>& box) {
    json out = json::array();
    for (const auto& r : box) {
        out.push_back({r.lo, r.hi});
    }
    return out;
}

json panel_meta_to_json(const PanelMeta& p) {
    return {{"pitch_mm", p.pitch_mm}, {"width", p.width}, {"height", p.height}};
}

PanelMeta panel_meta_from_json(const json& j) {
    return PanelMeta{j.at("pitch_mm").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
}

void expect_type(const json& j, const char* type) {
    if (model_type(j) != type) {
        fail(ErrorCode::Parse, std::string("expected a ") + type + " document, got '" + model_type(j) + "'");
    }
}

json sample_to_json(const DisplaySample& s) {
    return {{"p_view", vec_to_json(s.p_view)}, {"p_pixel", vec_to_json(s.p_pixel)}, {"v", vec_to_json(s.v.vec())}};
}

json sample_to_json(const SeethruSample& s) {
    return {{"p_view", vec_to_json(s.p_view)},
            {"v", vec_to_json(s.v.vec())},
            {"p_plus", vec_to_json(s.p_plus)},
            {"p_minus", vec_to_json(s.p_minus)}};
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::Io, "sha256: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        fail(ErrorCode::Io, "cannot open " + path);
    }
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        fail(ErrorCode::Io, "cannot write " + path);
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        fail(ErrorCode::Io, "write failed for " + path);
    }
}

json parse_json(std::string_view text) {
    return guarded("parse", [&] { return json::parse(text); });
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json vec_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Vec2 vec2_from_json(const json& j) {
    return guarded("vec2", [&] {
        if (j.size() != 2) {
            fail(ErrorCode::Parse, "expected 2 components");
        }
        return Vec2(j.at(0).get<double>(), j.at(1).get<double>());
    });
}

Vec3 vec3_from_json(const json& j) {
    return guarded("vec3", [&] {
        if (j.size() != 3) {
            fail(ErrorCode::Parse, "expected 3 components");
        }
        return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
    });
}

json plane_to_json(const ChartedPlane& p) {
    return {{"origin", vec_to_json(p.origin())}, {"u", vec_to_json(p.u_axis())}, {"v", vec_to_json(p.v_axis())}};
}

ChartedPlane plane_from_json(const json& j) {
    return guarded("plane", [&] {
        return ChartedPlane(vec3_from_json(j.at("origin")), vec3_from_json(j.at("u")), vec3_from_json(j.at("v")));
    });
}

json camera_to_json(const PinholeCamera& c) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
        rows.push_back(vec_to_json(c.orientation().row(r).transpose()));
    }
    return {{"position", vec_to_json(c.position())},
            {"orientation", rows},
            {"focal_px", c.focal_px()},
            {"width", c.width()},
            {"height", c.height()},
            {"principal", vec_to_json(c.principal())}};
}

PinholeCamera camera_from_json(const json& j) {
    return guarded("camera", [&] {
        Eigen::Matrix3d rot;
        for (int r = 0; r < 3; ++r) {
            rot.row(r) = vec3_from_json(j.at("orientation").at(r)).transpose();
        }
        return PinholeCamera(vec3_from_json(j.at("position")), rot, j.at("focal_px").get<double>(),
                             j.at("width").get<int>(), j.at("height").get<int>(), vec2_from_json(j.at("principal")));
    });
}

json system_to_json(const OpticalSystem& s) {
    json surfaces = json::array();
    for (const Surface& surf : s.surfaces) {
        json shape;
        if (const auto* cap = std::get_if<SphericalCap>(&surf.shape)) {
            shape = {{"type", "sphere"},
                     {"center", vec_to_json(cap->center)},
                     {"radius", cap->radius},
                     {"aperture_radius", cap->aperture_radius}};
        } else {
            const auto& pl = std::get<PlaneSurface>(surf.shape);
            shape = {{"type", "plane"}, {"plane", plane_to_json(pl.plane)}, {"aperture_radius", pl.aperture_radius}};
        }
        json inter;
        if (const auto* rf = std::get_if<Refract>(&surf.interaction)) {
            inter = {{"type", "refract"}, {"n_before", rf->n_before}, {"n_after", rf->n_after}};
        } else {
            inter = {{"type", "reflect"}};
        }
        surfaces.push_back({{"shape", shape}, {"interaction", inter}});
    }
    json out = {{"type", "optical_system"}, {"name", s.name}, {"kind", kind_name(s.kind)}, {"surfaces", surfaces}};
    if (s.panel) {
        out["panel"] = {{"plane", plane_to_json(s.panel->plane)},
                        {"pitch_mm", s.panel->pitch_mm},
                        {"width", s.panel->width},
                        {"height", s.panel->height}};
    }
    if (s.world_planes) {
        out["world_planes"] = {plane_to_json(s.world_planes->first), plane_to_json(s.world_planes->second)};
    }
    return out;
}

OpticalSystem system_from_json(const json& j) {
    return guarded("optical system", [&] {
        expect_type(j, "optical_system");
        OpticalSystem s;
        s.name = j.at("name").get<std::string>();
        s.kind = kind_from(j.at("kind").get<std::string>());
        for (const json& js : j.at("surfaces")) {
            Surface surf;
            const json& shape = js.at("shape");
            const std::string st = shape.at("type").get<std::string>();
            if (st == "sphere") {
                surf.shape = SphericalCap{vec3_from_json(shape.at("center")), shape.at("radius").get<double>(),
                                          shape.at("aperture_radius").get<double>()};
            } else if (st == "plane") {
                surf.shape = PlaneSurface{plane_from_json(shape.at("plane")), shape.at("aperture_radius").get<double>()};
            } else {
                fail(ErrorCode::Parse, "unknown surface shape '" + st + "'");
            }
            const json& inter = js.at("interaction");
            const std::string it = inter.at("type").get<std::string>();
            if (it == "refract") {
                surf.interaction = Refract{inter.at("n_before").get<double>(), inter.at("n_after").get<double>()};
            } else if (it == "reflect") {
                surf.interaction = Reflect{};
            } else {
                fail(ErrorCode::Parse, "unknown surface interaction '" + it + "'");
            }
            s.surfaces.push_back(surf);
        }
        if (j.contains("panel")) {
            const json& p = j.at("panel");
            s.panel = Panel{plane_from_json(p.at("plane")), p.at("pitch_mm").get<double>(), p.at("width").get<int>(),
                            p.at("height").get<int>()};
        }
        if (j.contains("world_planes")) {
            const json& w = j.at("world_planes");
            s.world_planes = std::make_pair(plane_from_json(w.at(0)), plane_from_json(w.at(1)));
        }
        s.validate();
        return s;
    });
}

json poly_to_json(const PolyModel& m) {
    json coeffs = json::array();
    for (Eigen::Index r = 0; r < m.coeffs().rows(); ++r) {
        coeffs.push_back(vec_to_json(m.coeffs().row(r).transpose()));
    }
    return {{"in_dim", m.in_dim()},
            {"out_dim", m.out_dim()},
            {"degree", m.degree()},
            {"input_box", box_to_json(m.input_box())},
            {"exponents", m.exponents()},
            {"coeffs", coeffs}};
}

PolyModel poly_from_json(const json& j) {
    return guarded("polynomial", [&] {
        std::vector<InputRange> box;
        for (const json& r : j.at("input_box")) {
            box.push_back(InputRange{r.at(0).get<double>(), r.at(1).get<double>()});
        }
        PolyModel m(j.at("in_dim").get<int>(), j.at("out_dim").get<int>(), j.at("degree").get<int>(), box);
        if (j.at("exponents").get<std::vector<std::vector<int>>>() != m.exponents()) {
            fail(ErrorCode::Parse, "polynomial: exponent table does not match the total-degree basis");
        }
        const json& c = j.at("coeffs");
        if (c.size() != static_cast<std::size_t>(m.out_dim())) {
            fail(ErrorCode::Parse, "polynomial: coefficient rows do not match out_dim");
        }
        Eigen::MatrixXd coeffs(m.out_dim(), m.n_terms());
        for (int r = 0; r < m.out_dim(); ++r) {
            const auto row = c.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
            if (row.size() != static_cast<std::size_t>(m.n_terms())) {
                fail(ErrorCode::Parse, "polynomial: coefficient row length does not match the basis");
            }
            for (int k = 0; k < m.n_terms(); ++k) {
                coeffs(r, k) = row[static_cast<std::size_t>(k)];
            }
        }
        m.set_coeffs(coeffs);
        return m;
    });
}

json display_model_to_json(const DisplayModel& m) {
    return {{"type", "display_model"},
            {"fwd", poly_to_json(m.fwd)},
            {"bwd", poly_to_json(m.bwd)},
            {"base_plane", plane_to_json(m.base_plane)},
            {"panel", panel_meta_to_json(m.panel)}};
}

DisplayModel display_model_from_json(const json& j) {
    return guarded("display model", [&] {
        expect_type(j, "display_model");
        DisplayModel m;
        m.fwd = poly_from_json(j.at("fwd"));
        m.bwd = poly_from_json(j.at("bwd"));
        if (m.fwd.in_dim() != 4 || m.fwd.out_dim() != 2 || m.bwd.in_dim() != 4 || m.bwd.out_dim() != 2) {
            fail(ErrorCode::Parse, "display model: both maps must be 4 -> 2");
        }
        m.base_plane = plane_from_json(j.at("base_plane"));
        m.panel = panel_meta_from_json(j.at("panel"));
        return m;
    });
}

json seethru_model_to_json(const SeethruModel& m) {
    return {{"type", "seethru_model"},
            {"fwd", poly_to_json(m.fwd)},
            {"base_plane", plane_to_json(m.base_plane)},
            {"world_planes", {plane_to_json(m.world_planes.first), plane_to_json(m.world_planes.second)}}};
}

SeethruModel seethru_model_from_json(const json& j) {
    return guarded("see-through model", [&] {
        expect_type(j, "seethru_model");
        SeethruModel m;
        m.fwd = poly_from_json(j.at("fwd"));
        if (m.fwd.in_dim() != 4 || m.fwd.out_dim() != 4) {
            fail(ErrorCode::Parse, "see-through model: map must be 4 -> 4");
        }
        m.base_plane = plane_from_json(j.at("base_plane"));
        m.world_planes = {plane_from_json(j.at("world_planes").at(0)), plane_from_json(j.at("world_planes").at(1))};
        return m;
    });
}

json volumetric_model_to_json(const VolumetricDisplayModel& m) {
    return {{"type", "volumetric_display_model"}, {"poly", poly_to_json(m.poly)}};
}

VolumetricDisplayModel volumetric_model_from_json(const json& j) {
    return guarded("volumetric model", [&] {
        expect_type(j, "volumetric_display_model");
        VolumetricDisplayModel m{poly_from_json(j.at("poly"))};
        if (m.poly.in_dim() != 5 || m.poly.out_dim() != 2) {
            fail(ErrorCode::Parse, "volumetric model: map must be 5 -> 2");
        }
        return m;
    });
}

json scene_to_json(const DotGridScene& s) {
    json dots = json::array();
    for (std::size_t i = 0; i < s.centers.size(); ++i) {
        dots.push_back({{"center", vec_to_json(s.centers[i])}, {"large", static_cast<bool>(s.large[i])}});
    }
    return {{"type", "dot_grid_scene"},
            {"plane", plane_to_json(s.plane)},
            {"large_radius", s.large_radius},
            {"small_radius", s.small_radius},
            {"dots", dots}};
}

DotGridScene scene_from_json(const json& j) {
    return guarded("scene", [&] {
        expect_type(j, "dot_grid_scene");
        DotGridScene s;
        s.plane = plane_from_json(j.at("plane"));
        s.large_radius = j.at("large_radius").get<double>();
        s.small_radius = j.at("small_radius").get<double>();
        for (const json& d : j.at("dots")) {
            s.centers.push_back(vec2_from_json(d.at("center")));
            s.large.push_back(d.at("large").get<bool>());
        }
        s.validate();
        return s;
    });
}

json sampling_to_json(const SamplingSpec& s) {
    return {{"mode", s.mode == SamplingMode::Planar ? "planar" : "volumetric"},
            {"base_plane", plane_to_json(s.base_plane)},
            {"n_u", s.n_u},
            {"n_v", s.n_v},
            {"u_range", vec_to_json(s.u_range)},
            {"v_range", vec_to_json(s.v_range)},
            {"n_z", s.n_z},
            {"z_range", vec_to_json(s.z_range)},
            {"camera", camera_to_json(s.camera)},
            {"n_px_u", s.n_px_u},
            {"n_px_v", s.n_px_v}};
}

SamplingSpec sampling_from_json(const json& j) {
    return guarded("sampling spec", [&] {
        SamplingSpec s;
        const std::string mode = j.value("mode", std::string("planar"));
        if (mode == "planar") {
            s.mode = SamplingMode::Planar;
        } else if (mode == "volumetric") {
            s.mode = SamplingMode::Volumetric;
        } else {
            fail(ErrorCode::Parse, "unknown sampling mode '" + mode + "'");
        }
        if (j.contains("base_plane")) {
            s.base_plane = plane_from_json(j.at("base_plane"));
        }
        s.n_u = j.value("n_u", s.n_u);
        s.n_v = j.value("n_v", s.n_v);
        if (j.contains("u_range")) {
            s.u_range = vec2_from_json(j.at("u_range"));
        }
        if (j.contains("v_range")) {
            s.v_range = vec2_from_json(j.at("v_range"));
        }
        s.n_z = j.value("n_z", s.n_z);
        if (j.contains("z_range")) {
            s.z_range = vec2_from_json(j.at("z_range"));
        }
        if (j.contains("camera")) {
            s.camera = camera_from_json(j.at("camera"));
        }
        s.n_px_u = j.value("n_px_u", s.n_px_u);
        s.n_px_v = j.value("n_px_v", s.n_px_v);
        return s;
    });
}

json noise_to_json(const NoiseSpec& n) { return {{"sigma_px", n.sigma_px}, {"seed", n.seed}}; }

NoiseSpec noise_from_json(const json& j) {
    return guarded("noise spec", [&] {
        NoiseSpec n;
        n.sigma_px = j.value("sigma_px", n.sigma_px);
        n.seed = j.value("seed", n.seed);
        return n;
    });
}

json fit_report_to_json(const FitReport& r) {
    return {{"rms_residual", r.rms_residual},
            {"max_residual", r.max_residual},
            {"condition_estimate", r.condition_estimate},
            {"n_samples", r.n_samples},
            {"regularized", r.regularized}};
}

json report_to_json(const EvalReport& r, bool with_values) {
    json out = {{"metric", to_string(r.metric)},
                {"rms", r.rms},
                {"mean", r.mean},
                {"p95", r.p95},
                {"max", r.max},
                {"count", r.count},
                {"dropped", r.dropped},
                {"config", r.config}};
    if (with_values) {
        out["values"] = r.values;
    }
    return out;
}

std::string dataset_to_jsonl(const CorrespondenceSet& data, const json& extra) {
    std::string body;
    if (data.kind == SystemKind::Display) {
        for (const auto& s : data.display) {
            body += sample_to_json(s).dump() + "\n";
        }
    } else {
        for (const auto& s : data.seethru) {
            body += sample_to_json(s).dump() + "\n";
        }
    }
    json header = {{"format", "hmdcal-dataset"},
                   {"version", 1},
                   {"kind", kind_name(data.kind)},
                   {"system_id", data.provenance.system_id},
                   {"sampling", sampling_to_json(data.provenance.sampling)},
                   {"noise", noise_to_json(data.provenance.noise)},
                   {"dropped", data.provenance.dropped},
                   {"count", data.size()},
                   {"body_sha256", sha256_hex(body)}};
    if (data.provenance.panel) {
        const Panel& p = *data.provenance.panel;
        header["panel"] = {{"plane", plane_to_json(p.plane)}, {"pitch_mm", p.pitch_mm}, {"width", p.width},
                           {"height", p.height}};
    }
    if (data.provenance.world_planes) {
        header["world_planes"] = {plane_to_json(data.provenance.world_planes->first),
                                  plane_to_json(data.provenance.world_planes->second)};
    }
    if (!extra.is_null()) {
        header["provenance"] = extra;
    }
    return header.dump() + "\n" + body;
}

json dataset_header(std::string_view text) {
    const std::size_t eol = text.find('\n');
    if (eol == std::string_view::npos) {
        fail(ErrorCode::Parse, "dataset: missing header line");
    }
    return parse_json(text.substr(0, eol));
}

CorrespondenceSet dataset_from_jsonl(std::string_view text) {
    const json header = dataset_header(text);
    const std::size_t eol = text.find('\n');
    const std::string_view body = text.substr(eol + 1);
    return guarded("dataset", [&] {
        if (header.at("format").get<std::string>() != "hmdcal-dataset") {
            fail(ErrorCode::Parse, "dataset: unknown format tag");
        }
        const std::string expected = header.at("body_sha256").get<std::string>();
        const std::string actual = sha256_hex(body);
        if (expected != actual) {
            fail(ErrorCode::Integrity, "dataset: body hash " + actual + " does not match header " + expected);
        }
        CorrespondenceSet out;
        out.kind = kind_from(header.at("kind").get<std::string>());
        out.provenance.system_id = header.at("system_id").get<std::string>();
        out.provenance.sampling = sampling_from_json(header.at("sampling"));
        out.provenance.noise = noise_from_json(header.at("noise"));
        out.provenance.dropped = header.at("dropped").get<int>();
        if (header.contains("panel")) {
            const json& p = header.at("panel");
            out.provenance.panel = Panel{plane_from_json(p.at("plane")), p.at("pitch_mm").get<double>(),
                                         p.at("width").get<int>(), p.at("height").get<int>()};
        }
        if (header.contains("world_planes")) {
            const json& w = header.at("world_planes");
            out.provenance.world_planes = std::make_pair(plane_from_json(w.at(0)), plane_from_json(w.at(1)));
        }
        std::size_t pos = 0;
        while (pos < body.size()) {
            const std::size_t end = body.find('\n', pos);
            const std::string_view line = body.substr(pos, end == std::string_view::npos ? body.size() - pos : end - pos);
            pos = end == std::string_view::npos ? body.size() : end + 1;
            if (line.empty()) {
                continue;
            }
            const json r = parse_json(line);
            if (out.kind == SystemKind::Display) {
                out.display.push_back(DisplaySample{vec3_from_json(r.at("p_view")), vec2_from_json(r.at("p_pixel")),
                                                    UnitDir::from_unit(vec3_from_json(r.at("v")))});
            } else {
                out.seethru.push_back(SeethruSample{vec3_from_json(r.at("p_view")),
                                                    UnitDir::from_unit(vec3_from_json(r.at("v"))),
                                                    vec2_from_json(r.at("p_plus")), vec2_from_json(r.at("p_minus"))});
            }
        }
        if (out.size() != header.at("count").get<std::size_t>()) {
            fail(ErrorCode::Parse, "dataset: sample count does not match header");
        }
        return out;
    });
}

std::string model_type(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        return "";
    }
    return j.at("type").get<std::string>();
}

} // namespace hmdcal
