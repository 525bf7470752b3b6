// SPDX-License-Identifier: MIT
#pragma once

#include "wdn/placement.hpp"

namespace wdn {

/// What is being designed: joint placement + control (counts free) or
/// control only for a fixed valve configuration. A fixed config with empty
/// directions gets them enumerated once per solve.
struct DesignSpec {
    enum class Mode { Joint, Fixed } mode = Mode::Joint;
    int n_v = 0, n_f = 0;  // joint mode
    ValveConfig config;    // fixed mode
};

struct AnchorPoint {
    double azp = 0.0;            // m
    double scc_indicator = 0.0;  // fraction
    double scc_sigmoid = 0.0;    // fraction, used for normalization
    PlacementSolution solution;
};

struct AnchorSet {
    AnchorPoint azp_anchor;  // from the AZP-minimizing solve
    AnchorPoint scc_anchor;  // from the SCC-maximizing solve
    double utopia_azp = 0.0;
    double utopia_scc_sigmoid = 0.0;

    Normalization normalization() const {
        return {azp_anchor.azp, scc_anchor.azp, scc_anchor.scc_sigmoid,
                azp_anchor.scc_sigmoid};
    }
};

struct ParetoPoint {
    double omega = 0.0;
    double azp = 0.0;            // m, exact (HW) model
    double scc_indicator = 0.0;  // fraction
    double scc_sigmoid = 0.0;
    double azp_norm = 0.0, scc_norm = 0.0;  // normalized coordinates
    ValveConfig config;
    ControlSettings settings;
    bool dominated = false;
    bool solved = false;
    std::string error;  // when !solved
};

AnchorSet compute_anchors(const NetworkSolver& solver, const Scenario& scenario,
                          const DesignSpec& design, const PlacementOptions& opt = {});

std::vector<double> default_weights(int n = 10);

/// Weighted-sum sweep min (1-w) f1_norm + w f2_norm over the given weights.
/// Endpoint weights reuse the anchor solutions. Per-weight failures are
/// recorded on the point, the sweep continues. Points carry exact-model
/// objectives; `dominated` flags are set by pareto_filter.
std::vector<ParetoPoint> weighted_sum_front(const NetworkSolver& solver, const Scenario& scenario,
                                            const DesignSpec& design, const AnchorSet& anchors,
                                            const std::vector<double>& weights,
                                            const PlacementOptions& opt = {});

/// Indices of points not weakly dominated by any other, minimizing the
/// first coordinate and maximizing the second; duplicate pairs collapse to
/// the earliest by input order.
std::vector<int> non_dominated_indices(const std::vector<std::pair<double, double>>& points);

/// Marks `dominated` on each solved point (unsolved points are skipped) and
/// returns the surviving points in input order.
std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint>& points);

/// Two-stage placement: PCVs located by the AZP problem with no AFVs, then
/// AFV locations by the SCC problem with the PCV set pinned. Directions are
/// left unset for downstream control sweeps to enumerate.
ValveConfig hierarchical_design(const NetworkSolver& solver, const Scenario& scenario, int n_v,
                                int n_f, const PlacementOptions& opt = {});

} // namespace wdn
