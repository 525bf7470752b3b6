// SPDX-License-Identifier: MIT
#pragma once

#include <optional>

#include "wdn/lp.hpp"
#include "wdn/objectives.hpp"

namespace wdn {

/// Fixed valve placement: PCV links with one control direction each
/// (time-invariant) and AFV nodes.
struct ValveConfig {
    std::vector<int> pcv_links;   // link indices, sorted
    std::vector<int> afv_nodes;   // node indices, sorted
    std::vector<int> directions;  // +1 / -1 per PCV, same order as pcv_links

    int n_v() const { return static_cast<int>(pcv_links.size()); }
    int n_f() const { return static_cast<int>(afv_nodes.size()); }
    bool operator==(const ValveConfig&) const = default;
};

enum class ObjectiveKind { AZP, SCC, Weighted };

/// Anchor-based normalization constants for the weighted-sum objective.
struct Normalization {
    double azp_at_azp_anchor = 0.0;
    double azp_at_scc_anchor = 1.0;
    double scc_at_scc_anchor = 1.0;
    double scc_at_azp_anchor = 0.0;
};

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::AZP;
    double omega = 0.0;  // weight on the (normalized) -SCC term
    Normalization norm;
    double rho = 50.0;

    /// Scalar minimization value for reporting/comparison: AZP in m,
    /// -SCC (sigmoid) for SCC, or the normalized weighted sum.
    double scalar(double azp_value, double scc_sigmoid_value) const;
};

struct ScpOptions {
    double rel_tol = 1e-6;
    int max_iterations = 100;
    double initial_radius_frac = 0.2;  // fraction of each variable's bound range
    double expand = 2.0, shrink = 0.5;
    double ratio_expand = 0.75, ratio_shrink = 0.25, ratio_reject = 0.05;
    double penalty = 1e3;              // l1 elastic penalty on constraint violation
    double feas_tol = 1e-6;            // scaled violation tolerance (QA model)
    double feas_tol_exact = 0.05;      // m, tolerated violation after HW re-simulation
    SolverOptions hydraulics;
};

struct ControlSolution {
    ControlSettings settings;
    HydraulicState state;        // exact (HW) re-simulation
    ObjectiveValue objective;    // evaluated on the HW state
    bool converged = false;
    bool feasible = false;
    int iterations = 0;          // total SCP iterations over all steps
    double scalar_objective = 0.0;   // HW model, minimization orientation
    double qa_objective = 0.0;       // final internal (QA) scalar objective
    double qa_hw_gap = 0.0;          // |qa - hw| / max(|hw|, eps)
    double max_violation = 0.0;      // scaled, on the HW state
    std::string most_violated;
};

/// Locally optimal time-varying settings for a fixed valve configuration:
/// per-step trust-region SCP over (eta, alpha) with linearized state
/// constraints, QA model internally, exact HW re-simulation on return.
ControlSolution solve_vc_nlp(const NetworkSolver& solver, const Scenario& scenario,
                             const ValveConfig& config, const ObjectiveSpec& objective,
                             const std::optional<ControlSettings>& start = {},
                             const ScpOptions& opt = {});

struct DirectionSweepEntry {
    std::vector<int> directions;
    double scalar_objective = 0.0;
    bool feasible = false;
};
struct DirectionSweep {
    ControlSolution best;
    std::vector<int> best_directions;
    std::vector<DirectionSweepEntry> entries;
};

/// Solves VC-NLP for all 2^n_v time-invariant direction assignments and
/// returns the best feasible solution (ties broken by assignment order).
DirectionSweep enumerate_directions(const NetworkSolver& solver, const Scenario& scenario,
                                    ValveConfig config, const ObjectiveSpec& objective,
                                    const std::optional<ControlSettings>& start = {},
                                    const ScpOptions& opt = {}, int enum_cap = 10);

} // namespace wdn
