// SPDX-License-Identifier: MIT
#pragma once

#include <filesystem>

#include "wdn/adaptive.hpp"
#include "wdn/pareto.hpp"

// vendored single-header nlohmann/json
#include "json.hpp"

namespace wdn {

inline constexpr const char* kVersion = "0.1.0";

/// Fully resolved options of one CLI invocation. Serialized as the run
/// manifest; loading a manifest and re-dispatching reproduces the run.
struct RunConfig {
    std::string command;  // simulate | place | pareto | adapt
    std::string network_path;
    std::string out_dir = "out";
    std::string model = "hw";       // simulate: hw | qa
    std::string objective = "azp";  // place: azp | scc
    std::string design = "joint";   // pareto: joint | hierarchical | fixed:<config.json>
    int n_v = 0, n_f = 0;
    int weights = 10;
    int trials = 20;
    int obbt_rounds = 0;
    int enum_cap = 10;
    std::uint64_t seed = 12345;
    double rho = 50.0;
    double u_min = 0.2;            // m/s, self-cleaning threshold (all links)
    double u_max = 2.0;            // m/s, flow bound
    double alpha_max_lps = 25.0;   // L/s, flushing cap
    double regulatory_head = 15.0; // m, pressure floor at demand nodes
    double tol = 1e-9;             // Newton tolerance
    std::string config_path;       // adapt (and pareto fixed designs)
    std::vector<std::string> windows;  // adapt: "HH:MM-HH:MM"
    std::string version = kVersion;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Writes to a temp file in the same directory, then renames over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::json valve_config_to_json(const ValveConfig& config, const NetworkModel& model);
ValveConfig valve_config_from_json(const nlohmann::json& j, const NetworkModel& model);

std::string state_csv(const NetworkModel& model, const HydraulicState& state);
std::string settings_csv(const NetworkModel& model, const ControlSettings& settings);
std::string front_csv(const std::vector<ParetoPoint>& points);
std::string plan_csv(const NetworkModel& model, const AdaptivePlan& plan);
std::string cdf_csv(const PressureRangeStats& stats);
nlohmann::json objectives_json(const ObjectiveValue& value, const ResidualReport& residuals);

/// Maps "HH:MM-HH:MM" to steps; partial-step overlap rounds outward.
Window parse_window(const std::string& text, double step_minutes, int n_t);

} // namespace wdn
