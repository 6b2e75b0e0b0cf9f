#include "hmdcal/cli.hpp"

#include <algorithm>
#include <ostream>

#include <CLI11.hpp>

#include "hmdcal/io.hpp"

namespace hmdcal {

namespace {

// Flags shared by several subcommands. An option pointer with a nonzero
// count means the flag was given and overrides the config file.
struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    int degree = 0;
    double sigma_px = 0.0;
    std::string mode;
    std::string out;
    int workers = 1;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_degree = nullptr;
    CLI::Option* o_sigma = nullptr;
    CLI::Option* o_mode = nullptr;
    CLI::Option* o_workers = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

void add_config(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "output file");
}

RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) {
        cfg = RunConfig::from_json(parse_json(read_file(f.config)));
    }
    if (given(f.o_seed)) {
        cfg.noise.seed = f.seed;
        cfg.eval.seed = f.seed;
    }
    if (given(f.o_degree)) {
        cfg.degree = f.degree;
    }
    if (given(f.o_sigma)) {
        cfg.noise.sigma_px = f.sigma_px;
    }
    if (given(f.o_mode)) {
        if (f.mode == "planar") {
            cfg.sampling.mode = SamplingMode::Planar;
        } else if (f.mode == "volumetric") {
            cfg.sampling.mode = SamplingMode::Volumetric;
        } else {
            fail(ErrorCode::InvalidArgument, "--mode must be planar or volumetric");
        }
    }
    if (given(f.o_workers)) {
        cfg.workers = f.workers;
    }
    if (!f.out.empty()) {
        cfg.out = f.out;
    }
    cfg.validate();
    return cfg;
}

void require_out(const RunConfig& cfg) {
    if (cfg.out.empty()) {
        fail(ErrorCode::InvalidArgument, "no output file: pass --out or set \"out\" in the config");
    }
}

SystemKind kind_of(const std::string& k) {
    if (k == "display") {
        return SystemKind::Display;
    }
    if (k == "seethru") {
        return SystemKind::Seethru;
    }
    fail(ErrorCode::InvalidArgument, "kind must be display or seethru, got '" + k + "'");
}

bool is_preset(const std::string& s) {
    const auto names = presets::names();
    return std::find(names.begin(), names.end(), s) != names.end();
}

struct LoadedSystem {
    OpticalSystem sys;
    json input;  ///< provenance entry
};

LoadedSystem load_system(const std::string& ref, SystemKind kind) {
    if (ref.empty()) {
        fail(ErrorCode::InvalidArgument, "no optical system given");
    }
    LoadedSystem out;
    if (is_preset(ref)) {
        out.sys = presets::by_name(ref, kind);
        out.input = {{"preset", ref}, {"sha256", sha256_hex(system_to_json(out.sys).dump())}};
    } else {
        const std::string text = read_file(ref);
        out.sys = system_from_json(parse_json(text));
        out.input = {{"path", ref}, {"sha256", sha256_hex(text)}};
    }
    if (out.sys.kind != kind) {
        fail(ErrorCode::InvalidArgument, "system '" + ref + "' is not of the expected kind");
    }
    return out;
}

json file_input(const std::string& path, const std::string& text) { return {{"path", path}, {"sha256", sha256_hex(text)}}; }

json provenance(const std::string& command, const RunConfig& cfg, json inputs) {
    return {{"tool", "hmdcal"}, {"format_version", 1}, {"command", command}, {"config", cfg.to_json()},
            {"inputs", std::move(inputs)}};
}

DotGridScene load_scene(const RunConfig& cfg, json& inputs) {
    if (cfg.scene.empty()) {
        const DotGridScene s = default_scene();
        inputs["scene"] = {{"default", true}, {"sha256", sha256_hex(scene_to_json(s).dump())}};
        return s;
    }
    const std::string text = read_file(cfg.scene);
    inputs["scene"] = file_input(cfg.scene, text);
    return scene_from_json(parse_json(text));
}

int cmd_collect(const RunConfig& cfg, std::ostream& out) {
    require_out(cfg);
    const SystemKind kind = kind_of(cfg.kind);
    const LoadedSystem ls = load_system(cfg.system, kind);
    CorrespondenceSet data;
    if (kind == SystemKind::Seethru) {
        data = collect_seethru(ls.sys, cfg.sampling, cfg.noise);
    } else if (cfg.sampling.mode == SamplingMode::Volumetric) {
        data = collect_display_volumetric(ls.sys, cfg.sampling, cfg.noise);
    } else {
        data = collect_display(ls.sys, cfg.sampling, cfg.noise);
    }
    write_file(cfg.out, dataset_to_jsonl(data, provenance("collect", cfg, {{"system", ls.input}})));
    out << "collect: " << data.size() << " samples, " << data.provenance.dropped << " dropped -> " << cfg.out << "\n";
    return 0;
}

int cmd_fit(const RunConfig& cfg, const std::string& data_path, std::ostream& out) {
    require_out(cfg);
    const std::string text = read_file(data_path);
    const CorrespondenceSet data = dataset_from_jsonl(text);
    const json prov = provenance("fit", cfg, {{"data", file_input(data_path, text)}});
    const SamplingSpec& spec = data.provenance.sampling;
    json doc;
    if (data.kind == SystemKind::Seethru) {
        if (!data.provenance.world_planes) {
            fail(ErrorCode::InvalidArgument, "fit: see-through dataset has no world planes in its header");
        }
        const SeethruFit f = fit_seethru(data, cfg.degree, spec.base_plane, *data.provenance.world_planes);
        doc = seethru_model_to_json(f.model);
        doc["fit"] = fit_report_to_json(f.report);
        out << "fit: see-through degree " << cfg.degree << ", rms " << f.report.rms_residual << " mm\n";
    } else if (spec.mode == SamplingMode::Volumetric) {
        const VolumetricFit f = fit_display_volumetric(data, cfg.degree);
        doc = volumetric_model_to_json(f.model);
        doc["fit"] = fit_report_to_json(f.report);
        out << "fit: volumetric degree " << cfg.degree << ", rms " << f.report.rms_residual << "\n";
    } else {
        if (!data.provenance.panel) {
            fail(ErrorCode::InvalidArgument, "fit: display dataset has no panel in its header");
        }
        const Panel& p = *data.provenance.panel;
        const DisplayFit f = fit_display(data, cfg.degree, spec.base_plane, PanelMeta{p.pitch_mm, p.width, p.height});
        doc = display_model_to_json(f.model);
        doc["fit"] = {{"fwd", fit_report_to_json(f.fwd_report)}, {"bwd", fit_report_to_json(f.bwd_report)}};
        out << "fit: display degree " << cfg.degree << ", backward rms " << f.bwd_report.rms_residual << " px\n";
    }
    doc["provenance"] = prov;
    write_file(cfg.out, dump_json(doc));
    return 0;
}

void print_report(std::ostream& out, const std::string& label, const EvalReport& r) {
    out << label << ": rms " << r.rms << " mean " << r.mean << " p95 " << r.p95 << " max " << r.max << " ("
        << to_string(r.metric) << ", n=" << r.count << ", dropped=" << r.dropped << ")\n";
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& baseline_path, bool samples,
             std::ostream& out) {
    require_out(cfg);
    const std::string text = read_file(model_path);
    const json mj = parse_json(text);
    json inputs = {{"model", file_input(model_path, text)}};
    json doc = {{"type", "eval_report"}};
    json reports;
    const std::string type = model_type(mj);
    if (type == "display_model") {
        const DisplayModel m = display_model_from_json(mj);
        const LoadedSystem ls = load_system(cfg.system, SystemKind::Display);
        inputs["system"] = ls.input;
        const DisplayEval ev = eval_display(m, ls.sys, cfg.eval);
        reports["backward"] = report_to_json(ev.backward, samples);
        reports["forward"] = report_to_json(ev.forward, samples);
        print_report(out, "display backward", ev.backward);
        print_report(out, "display forward", ev.forward);
        if (!baseline_path.empty()) {
            const std::string btext = read_file(baseline_path);
            inputs["baseline"] = file_input(baseline_path, btext);
            const VolumetricDisplayModel vm = volumetric_model_from_json(parse_json(btext));
            const FiberInvariance fi = eval_fiber_invariance(m, vm, ls.sys, cfg.n_fibers, cfg.eval.seed);
            doc["fiber_invariance"] = {{"planar_max_rad", fi.planar}, {"volumetric_max_rad", fi.volumetric},
                                       {"fibers", fi.count}};
            out << "fiber invariance: planar " << fi.planar << " rad, volumetric " << fi.volumetric << " rad\n";
        }
    } else if (type == "seethru_model") {
        const SeethruModel m = seethru_model_from_json(mj);
        const LoadedSystem ls = load_system(cfg.system, SystemKind::Seethru);
        inputs["system"] = ls.input;
        const SeethruEval ev = eval_seethru(m, ls.sys, cfg.eval);
        reports["forward"] = report_to_json(ev.forward, samples);
        reports["backward"] = report_to_json(ev.backward, samples);
        print_report(out, "seethru forward", ev.forward);
        print_report(out, "seethru backward", ev.backward);
        const double fi = eval_fiber_invariance(m, cfg.n_fibers, cfg.eval.seed);
        doc["fiber_invariance"] = {{"planar_max_rad", fi}, {"fibers", cfg.n_fibers}};
        out << "fiber invariance: planar " << fi << " rad\n";
    } else {
        fail(ErrorCode::InvalidArgument, "eval: expected a display or see-through model, got '" + type + "'");
    }
    doc["reports"] = reports;
    doc["provenance"] = provenance("eval", cfg, inputs);
    write_file(cfg.out, dump_json(doc));
    return 0;
}

struct ModelPair {
    DisplayModel dm;
    SeethruModel sm;
};

ModelPair load_models(const std::string& dm_path, const std::string& sm_path, json& inputs) {
    const std::string dtext = read_file(dm_path);
    const std::string stext = read_file(sm_path);
    inputs["display_model"] = file_input(dm_path, dtext);
    inputs["seethru_model"] = file_input(sm_path, stext);
    return ModelPair{display_model_from_json(parse_json(dtext)), seethru_model_from_json(parse_json(stext))};
}

int cmd_render(const RunConfig& cfg, const std::string& dm_path, const std::string& sm_path,
               const std::vector<double>& viewpoint, std::ostream& out) {
    require_out(cfg);
    if (viewpoint.size() != 3) {
        fail(ErrorCode::InvalidArgument, "render: --viewpoint needs exactly three numbers");
    }
    json inputs;
    const ModelPair models = load_models(dm_path, sm_path, inputs);
    const DotGridScene scene = load_scene(cfg, inputs);
    const Vec3 p_view(viewpoint[0], viewpoint[1], viewpoint[2]);
    RenderOptions ro;
    ro.workers = cfg.workers;
    const DisplayImage img = render_raytraced(models.dm, models.sm, p_view, scene, ro);
    json prov = provenance("render", cfg, inputs);
    prov["viewpoint"] = vec_to_json(p_view);
    write_pgm(img, cfg.out, prov.dump());
    const auto valid = std::count(img.valid.begin(), img.valid.end(), 1);
    out << "render: " << img.width << "x" << img.height << ", " << valid << " valid pixels -> " << cfg.out << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& dm_path, const std::string& sm_path, std::ostream& out) {
    require_out(cfg);
    json inputs;
    const ModelPair models = load_models(dm_path, sm_path, inputs);
    const LoadedSystem sd = load_system(cfg.display_system, SystemKind::Display);
    const LoadedSystem ss = load_system(cfg.seethru_system, SystemKind::Seethru);
    inputs["display_system"] = sd.input;
    inputs["seethru_system"] = ss.input;
    const DotGridScene scene = load_scene(cfg, inputs);
    VerifyOptions vo;
    vo.render.workers = cfg.workers;
    const EvalReport r = verify_end_to_end(models.dm, models.sm, sd.sys, ss.sys, scene, cfg.viewpoints, vo);
    print_report(out, "misalignment", r);
    const json doc = {{"type", "verify_report"}, {"report", report_to_json(r, true)},
                      {"provenance", provenance("verify", cfg, inputs)}};
    write_file(cfg.out, dump_json(doc));
    return 0;
}

} // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        c.system = j.value("system", c.system);
        c.kind = j.value("kind", c.kind);
        c.display_system = j.value("display_system", c.display_system);
        c.seethru_system = j.value("seethru_system", c.seethru_system);
        if (j.contains("sampling")) {
            c.sampling = sampling_from_json(j.at("sampling"));
        }
        if (j.contains("mode")) {
            json s = sampling_to_json(c.sampling);
            s["mode"] = j.at("mode");
            c.sampling = sampling_from_json(s);
        }
        if (j.contains("noise")) {
            c.noise = noise_from_json(j.at("noise"));
        }
        c.degree = j.value("degree", c.degree);
        if (j.contains("eval")) {
            const json& e = j.at("eval");
            c.eval.n_queries = e.value("n_queries", c.eval.n_queries);
            c.eval.seed = e.value("seed", c.eval.seed);
            if (e.contains("height_range")) {
                c.eval.height_range = vec2_from_json(e.at("height_range"));
            }
            if (e.contains("depth_range")) {
                c.eval.depth_range = vec2_from_json(e.at("depth_range"));
            }
        }
        if (j.contains("seed")) {
            c.noise.seed = j.at("seed").get<std::uint64_t>();
            c.eval.seed = c.noise.seed;
        }
        c.n_fibers = j.value("n_fibers", c.n_fibers);
        c.scene = j.value("scene", c.scene);
        if (j.contains("viewpoints")) {
            c.viewpoints.clear();
            for (const json& v : j.at("viewpoints")) {
                c.viewpoints.push_back(vec3_from_json(v));
            }
        }
        c.workers = j.value("workers", c.workers);
        c.out = j.value("out", c.out);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("config: ") + e.what());
    }
    return c;
}

json RunConfig::to_json() const {
    json views = json::array();
    for (const Vec3& v : viewpoints) {
        views.push_back(vec_to_json(v));
    }
    json ev = eval.to_json();
    return {{"system", system},
            {"kind", kind},
            {"display_system", display_system},
            {"seethru_system", seethru_system},
            {"sampling", sampling_to_json(sampling)},
            {"noise", noise_to_json(noise)},
            {"degree", degree},
            {"eval", ev},
            {"n_fibers", n_fibers},
            {"scene", scene},
            {"viewpoints", views},
            {"workers", workers},
            {"out", out}};
}

void RunConfig::validate() const {
    if (degree < 1) {
        fail(ErrorCode::InvalidArgument, "config: degree must be >= 1");
    }
    if (workers < 1) {
        fail(ErrorCode::InvalidArgument, "config: workers must be >= 1");
    }
    if (n_fibers < 1) {
        fail(ErrorCode::InvalidArgument, "config: n_fibers must be >= 1");
    }
    if (noise.sigma_px < 0.0) {
        fail(ErrorCode::InvalidArgument, "config: sigma_px must be >= 0");
    }
    kind_of(kind);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Display and see-through optics calibration toolkit", "hmdcal"};
    app.require_subcommand(1);

    Flags f;
    std::string system;
    std::string kind;
    std::string data_path;
    std::string model_path;
    std::string baseline_path;
    std::string dm_path;
    std::string sm_path;
    std::string display_system;
    std::string seethru_system;
    std::string scene_path;
    std::vector<double> viewpoint;
    bool samples = false;
    std::string preset_name;

    auto* collect = app.add_subcommand("collect", "simulate a calibration dataset");
    add_config(collect, f);
    collect->add_option("--system", system, "preset name or system file");
    collect->add_option("--kind", kind, "display or seethru");
    f.o_seed = collect->add_option("--seed", f.seed, "noise seed");
    f.o_sigma = collect->add_option("--sigma-px", f.sigma_px, "camera pixel noise");
    f.o_mode = collect->add_option("--mode", f.mode, "planar or volumetric");

    auto* fit = app.add_subcommand("fit", "fit a model to a dataset");
    add_config(fit, f);
    fit->add_option("--data", data_path, "dataset file")->required();
    f.o_degree = fit->add_option("--degree", f.degree, "total polynomial degree");

    auto* eval = app.add_subcommand("eval", "Monte Carlo accuracy of a model against the ray tracer");
    add_config(eval, f);
    eval->add_option("--model", model_path, "display or see-through model file")->required();
    eval->add_option("--system", system, "preset name or system file");
    eval->add_option("--baseline", baseline_path, "volumetric model for the fiber comparison");
    eval->add_flag("--samples", samples, "include per-sample values");
    auto* eval_seed = eval->add_option("--seed", f.seed, "query seed");

    auto* render = app.add_subcommand("render", "ray-traced display image for one viewpoint");
    add_config(render, f);
    render->add_option("--display-model", dm_path)->required();
    render->add_option("--seethru-model", sm_path)->required();
    render->add_option("--viewpoint", viewpoint, "x y z in mm")->required()->expected(3);
    render->add_option("--scene", scene_path, "dot grid scene file");
    auto* render_workers = render->add_option("--workers", f.workers, "render threads");

    auto* verify = app.add_subcommand("verify", "simulated end-to-end dot-grid alignment");
    add_config(verify, f);
    verify->add_option("--display-model", dm_path)->required();
    verify->add_option("--seethru-model", sm_path)->required();
    verify->add_option("--display-system", display_system, "preset name or system file");
    verify->add_option("--seethru-system", seethru_system, "preset name or system file");
    verify->add_option("--scene", scene_path, "dot grid scene file");
    verify->add_option("--viewpoint", viewpoint, "x y z in mm, repeatable")->expected(3, CLI::detail::expected_max_vector_size);
    auto* verify_workers = verify->add_option("--workers", f.workers, "render threads");

    auto* presets_cmd = app.add_subcommand("presets", "shipped optical systems");
    presets_cmd->require_subcommand(1);
    auto* presets_list = presets_cmd->add_subcommand("list", "list preset names and kinds");
    auto* presets_show = presets_cmd->add_subcommand("show", "print a preset as a system file");
    presets_show->add_option("name", preset_name)->required();
    presets_show->add_option("--kind", kind, "display or seethru")->required();
    auto* show_out = presets_show->add_option("--out", f.out, "output file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: code=InvalidArgument message=" << e.what() << "\n";
        return 2;
    }

    try {
        if (presets_list->parsed()) {
            for (const std::string& n : presets::names()) {
                std::vector<std::string> kinds;
                for (SystemKind k : {SystemKind::Display, SystemKind::Seethru}) {
                    try {
                        presets::by_name(n, k);
                        kinds.push_back(k == SystemKind::Display ? "display" : "seethru");
                    } catch (const Error&) {
                    }
                }
                out << n;
                for (std::size_t i = 0; i < kinds.size(); ++i) {
                    out << (i == 0 ? " " : ",") << kinds[i];
                }
                out << "\n";
            }
            return 0;
        }
        if (presets_show->parsed()) {
            const std::string text = dump_json(system_to_json(presets::by_name(preset_name, kind_of(kind))));
            if (given(show_out)) {
                write_file(f.out, text);
            } else {
                out << text;
            }
            return 0;
        }
        if (collect->parsed()) {
            RunConfig cfg = resolve(f);
            if (!system.empty()) {
                cfg.system = system;
            }
            if (!kind.empty()) {
                cfg.kind = kind;
                kind_of(kind);
            }
            return cmd_collect(cfg, out);
        }
        if (fit->parsed()) {
            return cmd_fit(resolve(f), data_path, out);
        }
        if (eval->parsed()) {
            f.o_seed = eval_seed;
            RunConfig cfg = resolve(f);
            if (!system.empty()) {
                cfg.system = system;
            }
            return cmd_eval(cfg, model_path, baseline_path, samples, out);
        }
        if (render->parsed()) {
            f.o_workers = render_workers;
            RunConfig cfg = resolve(f);
            if (!scene_path.empty()) {
                cfg.scene = scene_path;
            }
            return cmd_render(cfg, dm_path, sm_path, viewpoint, out);
        }
        if (verify->parsed()) {
            f.o_workers = verify_workers;
            RunConfig cfg = resolve(f);
            if (!display_system.empty()) {
                cfg.display_system = display_system;
            }
            if (!seethru_system.empty()) {
                cfg.seethru_system = seethru_system;
            }
            if (!scene_path.empty()) {
                cfg.scene = scene_path;
            }
            if (!viewpoint.empty()) {
                if (viewpoint.size() % 3 != 0) {
                    fail(ErrorCode::InvalidArgument, "verify: each --viewpoint needs three numbers");
                }
                cfg.viewpoints.clear();
                for (std::size_t i = 0; i < viewpoint.size(); i += 3) {
                    cfg.viewpoints.emplace_back(viewpoint[i], viewpoint[i + 1], viewpoint[i + 2]);
                }
            }
            return cmd_verify(cfg, dm_path, sm_path, out);
        }
    } catch (const Error& e) {
        err << "error: code=" << to_string(e.code()) << " message=" << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace hmdcal
