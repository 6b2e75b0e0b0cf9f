#pragma once

// JSON persistence for systems, models, scenes, reports and the line-oriented
// dataset format. Doubles are written in shortest round-trip form, so every
// value reads back bit-identical.
//
// Dataset layout: line 1 is a header object carrying provenance and the
// SHA-256 of the body; each following line is one sample object.

#include <string>
#include <string_view>

#include <json.hpp>

#include "hmdcal/calibration.hpp"
#include "hmdcal/display_model.hpp"
#include "hmdcal/evaluation.hpp"
#include "hmdcal/scene.hpp"
#include "hmdcal/seethru_model.hpp"

namespace hmdcal {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

/// Parses text as JSON; failures become Parse errors.
json parse_json(std::string_view text);
/// Two-space indented dump with a trailing newline.
std::string dump_json(const json& j);

json vec_to_json(const Eigen::VectorXd& v);
Vec2 vec2_from_json(const json& j);
Vec3 vec3_from_json(const json& j);

json plane_to_json(const ChartedPlane& p);
ChartedPlane plane_from_json(const json& j);

json camera_to_json(const PinholeCamera& c);
PinholeCamera camera_from_json(const json& j);

json system_to_json(const OpticalSystem& s);
OpticalSystem system_from_json(const json& j);

json poly_to_json(const PolyModel& m);
PolyModel poly_from_json(const json& j);

json display_model_to_json(const DisplayModel& m);
DisplayModel display_model_from_json(const json& j);

json seethru_model_to_json(const SeethruModel& m);
SeethruModel seethru_model_from_json(const json& j);

json volumetric_model_to_json(const VolumetricDisplayModel& m);
VolumetricDisplayModel volumetric_model_from_json(const json& j);

json scene_to_json(const DotGridScene& s);
DotGridScene scene_from_json(const json& j);

json sampling_to_json(const SamplingSpec& s);
SamplingSpec sampling_from_json(const json& j);

json noise_to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const json& j);

json fit_report_to_json(const FitReport& r);
json report_to_json(const EvalReport& r, bool with_values = false);

/// extra, when not null, is stored in the header under "provenance".
std::string dataset_to_jsonl(const CorrespondenceSet& data, const json& extra = nullptr);
/// Header object of a dataset file, without checking the body.
json dataset_header(std::string_view text);
/// Throws Integrity when the header hash does not match the body and Parse
/// on malformed lines or a sample count mismatch.
CorrespondenceSet dataset_from_jsonl(std::string_view text);

/// Type tag stored in every model document.
std::string model_type(const json& j);

} // namespace hmdcal
