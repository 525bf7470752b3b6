// SPDX-License-Identifier: MIT
#pragma once

#include "wdn/hydraulics.hpp"

namespace wdn {

struct ObjectiveParams {
    double rho = 50.0;  // sigmoid curvature
    // the velocity threshold lives per-link (Link::u_min)
};

struct ObjectiveValue {
    double azp = 0.0;            // m
    double scc_indicator = 0.0;  // fraction in [0,1]
    double scc_sigmoid = 0.0;    // fraction
    double pv = 0.0;             // m^2
    Vec azp_per_step;
    Vec scc_indicator_per_step;
    Vec scc_sigmoid_per_step;
};

/// Length-weighted, time-averaged pressure above elevation (Eq. AZP).
double azp(const NetworkModel& model, const HydraulicState& state);
Vec azp_per_step(const NetworkModel& model, const HydraulicState& state);

/// Self-cleaning capacity: fraction of network length (time-averaged) whose
/// velocity magnitude exceeds the per-link threshold. `smooth` selects the
/// sum-of-sigmoids form.
double scc(const NetworkModel& model, const HydraulicState& state, bool smooth,
           double rho = 50.0);
Vec scc_per_step(const NetworkModel& model, const HydraulicState& state, bool smooth,
                 double rho = 50.0);

/// Smooth SCC contribution of a single velocity: psi+(u) + psi-(u).
double scc_sigmoid_term(double u, double u_min, double rho);

/// Sum of squared inter-step nodal head differences, including the
/// wrap-around term between the last and first steps.
double pressure_variation(const HydraulicState& state);

/// Per-node (max - min) pressure over the horizon plus a CDF table of
/// sorted (range, cumulative fraction) pairs.
struct PressureRangeStats {
    Vec range;                                   // per node, m
    std::vector<std::pair<double, double>> cdf;  // (range_m, cum_fraction)
};
PressureRangeStats nodal_pressure_ranges(const NetworkModel& model, const HydraulicState& state);

ObjectiveValue evaluate_objectives(const NetworkModel& model, const HydraulicState& state,
                                   const ObjectiveParams& params = {});

} // namespace wdn
