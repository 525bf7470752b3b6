// SPDX-License-Identifier: MIT
#pragma once

#include "wdn/control.hpp"

namespace wdn {

enum class ControlMode { AZP, SCC };

/// Half-open step range [begin, end). begin == end means no SCC window.
struct Window {
    int begin = 0, end = 0;
    int length() const { return end - begin; }
    bool contains(int t) const { return t >= begin && t < end; }
    bool operator==(const Window&) const = default;
};

struct AdaptivePlan {
    std::vector<ControlMode> mode_per_step;
    Window window;
    ControlSettings settings;   // spliced: SCC solution inside the window, AZP outside
    HydraulicState state;       // exact re-simulation of the spliced settings
    ObjectiveValue metrics;     // whole horizon
    double pv = 0.0;            // pressure variation, m^2
    PressureRangeStats pv_stats;
    double window_azp = 0.0, window_scc = 0.0;  // averages over the window steps
    Vec setting_delta;          // per-step inf-norm change of (eta, alpha) vs previous step
};

/// Splices an SCC-optimal control over the window into an AZP-optimal base
/// plan and evaluates the result on the exact model. `azp_base` skips the
/// base solve when the caller already has it.
AdaptivePlan build_plan(const NetworkSolver& solver, const Scenario& scenario,
                        const ValveConfig& config, const Window& scc_window,
                        const ScpOptions& opt = {},
                        const ControlSolution* azp_base = nullptr);

/// Steps covering the hour of largest (smallest) total demand.
Window peak_demand_window(const Scenario& scenario, double hours = 1.0);
Window min_demand_window(const Scenario& scenario, double hours = 1.0);

struct ScenarioComparison {
    std::vector<AdaptivePlan> plans;  // first row is the AZP-only baseline
};

/// Evaluates the AZP-only baseline plus one plan per window. An empty
/// window list defaults to {peak-demand hour, min-demand hour}.
ScenarioComparison compare_scenarios(const NetworkSolver& solver, const Scenario& scenario,
                                     const ValveConfig& config, std::vector<Window> windows = {},
                                     const ScpOptions& opt = {});

} // namespace wdn
