#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "../support.hpp"
#include "hmdcal/io.hpp"

using namespace hmdcal;
using hmdcal::test::display_fit;
using hmdcal::test::error_code;
using hmdcal::test::Gen;
using hmdcal::test::seethru_fit;
using hmdcal::test::volumetric_fit;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!same_bits(a[i], b[i])) {
            return false;
        }
    }
    return true;
}

// Re-serialized text equals the original and evaluations agree bitwise.
void check_poly_roundtrip(const PolyModel& m, const PolyModel& back) {
    CHECK(back == m);
    Gen g(91);
    int exact = 0;
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd x = [&] {
            Eigen::VectorXd v(m.in_dim());
            for (int k = 0; k < m.in_dim(); ++k) {
                v[k] = g.uniform(m.input_box()[k].lo, m.input_box()[k].hi);
            }
            return v;
        }();
        exact += same_bits(m.eval(x), back.eval(x)) ? 1 : 0;
    }
    CHECK(exact == 200);
}

// Drops the last body line and rewrites the header hash to match.
std::string drop_last_sample_rehash(const std::string& text) {
    const std::size_t eol = text.find('\n');
    json header = parse_json(text.substr(0, eol));
    std::string body = text.substr(eol + 1);
    body.erase(body.rfind('\n', body.size() - 2) + 1);
    header["body_sha256"] = sha256_hex(body);
    return header.dump() + "\n" + body;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("sha256 reference digests") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    CHECK(sha256_hex(std::string(1000000, 'a')) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("doubles survive a dump and parse bit for bit") {
    Gen g(92);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(g.uniform(-1, 1), g.integer(-300, 300));
        const json j = parse_json(dump_json(json{{"x", x}}));
        CHECK(same_bits(j.at("x").get<double>(), x));
    }
    CHECK(dump_json(json{{"a", 1}}).back() == '\n');
    CHECK(error_code([] { parse_json("{\"a\": "); }) == ErrorCode::Parse);
}

TEST_CASE("polynomial and model documents round trip") {
    const DisplayModel& dm = display_fit("singlet").model;
    const std::string dtext = dump_json(display_model_to_json(dm));
    const DisplayModel dback = display_model_from_json(parse_json(dtext));
    check_poly_roundtrip(dm.fwd, dback.fwd);
    check_poly_roundtrip(dm.bwd, dback.bwd);
    CHECK(dump_json(display_model_to_json(dback)) == dtext);
    CHECK(model_type(parse_json(dtext)) == "display_model");

    const SeethruModel& sm = seethru_fit("wedge_combiner").model;
    const std::string stext = dump_json(seethru_model_to_json(sm));
    const SeethruModel sback = seethru_model_from_json(parse_json(stext));
    check_poly_roundtrip(sm.fwd, sback.fwd);
    CHECK(dump_json(seethru_model_to_json(sback)) == stext);

    const VolumetricDisplayModel& vm = volumetric_fit("singlet").model;
    const std::string vtext = dump_json(volumetric_model_to_json(vm));
    check_poly_roundtrip(vm.poly, volumetric_model_from_json(parse_json(vtext)).poly);

    // a document of the wrong type is refused
    CHECK(error_code([&] { seethru_model_from_json(parse_json(dtext)); }) == ErrorCode::Parse);
    CHECK(error_code([&] { display_model_from_json(parse_json("{\"type\": \"display_model\"}")); }) ==
          ErrorCode::Parse);
}

TEST_CASE("optical systems round trip") {
    for (const std::string& name : presets::names()) {
        for (SystemKind kind : {SystemKind::Display, SystemKind::Seethru}) {
            OpticalSystem sys;
            if (error_code([&] { sys = presets::by_name(name, kind); })) {
                continue;
            }
            const std::string text = dump_json(system_to_json(sys));
            const OpticalSystem back = system_from_json(parse_json(text));
            CHECK(dump_json(system_to_json(back)) == text);
            CHECK(back.name == sys.name);
            CHECK(back.surfaces.size() == sys.surfaces.size());
        }
    }
    // traces through the reloaded system agree bitwise
    const OpticalSystem sys = presets::singlet();
    const OpticalSystem back = system_from_json(parse_json(dump_json(system_to_json(sys))));
    const Vec3 eye(0.5, 0.5, 6.0);
    const UnitDir v(Vec3(0.1, -0.05, 1.0));
    const Vec2 a = trace_display_gt(eye, v, sys);
    const Vec2 b = trace_display_gt(eye, v, back);
    CHECK(same_bits(a.x(), b.x()));
    CHECK(same_bits(a.y(), b.y()));
}

TEST_CASE("scene, sampling and noise documents round trip") {
    const DotGridScene s = default_scene();
    const DotGridScene sb = scene_from_json(parse_json(dump_json(scene_to_json(s))));
    CHECK(sb.centers == s.centers);
    CHECK(sb.large == s.large);
    CHECK(sb.large_radius == s.large_radius);
    CHECK(dump_json(scene_to_json(sb)) == dump_json(scene_to_json(s)));

    SamplingSpec spec;
    spec.mode = SamplingMode::Volumetric;
    spec.n_z = 4;
    const std::string t = dump_json(sampling_to_json(spec));
    CHECK(dump_json(sampling_to_json(sampling_from_json(parse_json(t)))) == t);
    const NoiseSpec n{0.37, 123456789012345ULL};
    const NoiseSpec nb = noise_from_json(noise_to_json(n));
    CHECK(nb.sigma_px == n.sigma_px);
    CHECK(nb.seed == n.seed);
}

TEST_CASE("datasets round trip and detect tampering") {
    SamplingSpec spec;
    spec.n_u = spec.n_v = 3;
    spec.n_px_u = spec.n_px_v = 5;
    const auto data = collect_display(presets::singlet(), spec, NoiseSpec{0.5, 11});
    const std::string text = dataset_to_jsonl(data, json{{"note", "x"}});
    const CorrespondenceSet back = dataset_from_jsonl(text);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.display[i].p_pixel == data.display[i].p_pixel);
        CHECK(back.display[i].p_view == data.display[i].p_view);
        CHECK(back.display[i].v.vec() == data.display[i].v.vec());
    }
    CHECK(dataset_to_jsonl(back, json{{"note", "x"}}) == text);
    CHECK(dataset_header(text)["provenance"]["note"] == "x");
    CHECK(dataset_header(text)["count"] == data.size());

    const auto see = collect_seethru(presets::wedge_combiner(), spec, NoiseSpec{0.5, 11});
    const std::string see_text = dataset_to_jsonl(see);
    CHECK(dataset_to_jsonl(dataset_from_jsonl(see_text)) == see_text);

    // flip one digit in the body
    std::string tampered = text;
    const std::size_t at = tampered.find_first_of("123456789", tampered.find('\n') + 1);
    tampered[at] = tampered[at] == '1' ? '2' : '1';
    CHECK(error_code([&] { dataset_from_jsonl(tampered); }) == ErrorCode::Integrity);
    CHECK(error_code([&] { dataset_from_jsonl(drop_last_sample_rehash(text)); }) == ErrorCode::Parse);
    CHECK(error_code([] { dataset_from_jsonl("no header"); }) == ErrorCode::Parse);
}

TEST_CASE("report documents") {
    const EvalReport r = summarize(MetricKind::PixelOffset_px, {1, 2, 3}, 1, json{{"k", 2}});
    const json j = report_to_json(r);
    CHECK(j["count"] == 3);
    CHECK(j["dropped"] == 1);
    CHECK_FALSE(j.contains("values"));
    CHECK(report_to_json(r, true)["values"].size() == 3);
}

}
