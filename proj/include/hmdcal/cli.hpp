#pragma once

// Command-line driver: collect, fit, eval, render, verify and presets.
// Settings come from an optional JSON config file; flags override it.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmdcal/calibration.hpp"
#include "hmdcal/evaluation.hpp"

namespace hmdcal {

struct RunConfig {
    std::string system;          ///< preset name or system file, collect/eval
    std::string kind = "display";
    std::string display_system = "identity";
    std::string seethru_system = "identity";
    SamplingSpec sampling;
    NoiseSpec noise;
    int degree = 4;
    EvalSpec eval;
    int n_fibers = 1000;
    std::string scene;           ///< scene file; empty selects the default grid
    std::vector<Vec3> viewpoints = default_verify_viewpoints();
    int workers = 1;
    std::string out;

    /// Fields missing from j keep their defaults.
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Checks degree >= 1, workers >= 1 and the kind name.
    void validate() const;
};

/// Runs one invocation; args excludes the program name. Module errors print
/// "error: code=<Code> message=<text>" to err and return 1; usage errors
/// return 2.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hmdcal
