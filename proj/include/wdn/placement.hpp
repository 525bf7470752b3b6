// SPDX-License-Identifier: MIT
#pragma once

#include "wdn/control.hpp"

namespace wdn {

struct PlacementOptions {
    int trials = 20;                 // randomized rounding trials
    int obbt_rounds = 0;             // bound-tightening rounds before the relaxation solve
    std::uint64_t seed = 12345;
    int enum_cap = 10;               // direction-enumeration cap (2^n_v assignments)
    std::vector<int> fixed_pcv_links;  // when nonempty, PCV placement is pinned here
    ScpOptions scp;
    LpOptions lp;
};

/// Per-step convex relaxation of the joint placement + control problem.
/// Head-loss equalities are replaced by the polyhedral convex hull of the
/// QA curve, placement binaries are relaxed to [0,1] per step (a further
/// relaxation of the time-invariant binaries, so the bound stays valid),
/// and the sigmoid SCC objective is replaced by a concave piecewise-linear
/// over-estimator via hypograph variables.
struct RelaxedProblem {
    const NetworkModel* model = nullptr;
    const Scenario* scenario = nullptr;
    ObjectiveSpec objective;
    int n_v = 0, n_f = 0;
    // variable block offsets within each step's LP
    int off_q = 0, off_h = 0, off_theta = 0, off_eta = 0, off_alpha = 0;
    int off_z = 0, off_y = 0, off_s = 0, n_var = 0;
    std::vector<LpProblem> steps;      // one LP per time step
    std::vector<double> constant;      // per-step additive objective constant
};

struct RelaxationSolution {
    double bound = 0.0;        // certified lower bound on the scalar objective
    double objective = 0.0;    // relaxation optimum (time-averaged)
    Vec z, y;                  // time-averaged relaxed placement mass
    ControlSettings settings;  // relaxed valve settings, used to seed VC-NLP
};

struct PlacementSolution {
    ValveConfig config;
    ControlSolution control;
    double relaxation_bound = 0.0;
    double gap = 0.0;  // (feasible - bound) / max(|bound|, eps)
};

RelaxedProblem build_relaxation(const NetworkModel& model, const Scenario& scenario, int n_v,
                                int n_f, const ObjectiveSpec& objective,
                                const PlacementOptions& opt = {});

RelaxationSolution solve_relaxation(const RelaxedProblem& relaxed, const LpOptions& opt = {});

/// Optimization-based bound tightening over the relaxation: min/max selected
/// flow and PCV-loss variables subject to the relaxed constraints. Selected
/// variables are those at the links carrying the largest relaxed placement
/// mass (top 10%, at least one). Mutates the LPs in `relaxed` so later
/// solves see the tightened boxes, and returns the tightened bound set.
BoundsSet obbt(RelaxedProblem& relaxed, int max_rounds, const LpOptions& opt = {});

/// Samples `trials` valve configurations: links (nodes) are drawn without
/// replacement with probability proportional to the relaxed z (y) mass.
/// Entries with mass >= 1 - 1e-9 are always included. Deduplicated,
/// deterministic for a fixed seed, sorted lexicographically.
std::vector<ValveConfig> randomized_rounding(const RelaxationSolution& relaxed_solution,
                                             const NetworkModel& model, int n_v, int n_f,
                                             int trials, std::uint64_t seed);

/// Convex heuristic for the joint placement + control problem: relaxation,
/// optional OBBT, randomized rounding, direction enumeration and VC-NLP
/// polish per candidate, best feasible kept.
PlacementSolution solve_vp_minlp(const NetworkSolver& solver, const Scenario& scenario, int n_v,
                                 int n_f, const ObjectiveSpec& objective,
                                 const PlacementOptions& opt = {});

} // namespace wdn
