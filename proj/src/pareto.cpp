// SPDX-License-Identifier: MIT
#include "wdn/pareto.hpp"

#include <algorithm>
#include <cmath>

namespace wdn {

namespace {

PlacementSolution solve_for(const NetworkSolver& solver, const Scenario& scenario,
                            const DesignSpec& design, const ObjectiveSpec& objective,
                            const PlacementOptions& opt) {
    if (design.mode == DesignSpec::Mode::Joint)
        return solve_vp_minlp(solver, scenario, design.n_v, design.n_f, objective, opt);

    PlacementSolution out;
    out.config = design.config;
    if (out.config.directions.empty() && out.config.n_v() > 0) {
        DirectionSweep sweep = enumerate_directions(solver, scenario, out.config, objective, {},
                                                    opt.scp, opt.enum_cap);
        out.config.directions = sweep.best_directions;
        out.control = std::move(sweep.best);
    } else {
        out.control = solve_vc_nlp(solver, scenario, out.config, objective, {}, opt.scp);
    }
    out.relaxation_bound = out.control.scalar_objective;
    out.gap = 0.0;
    return out;
}

AnchorPoint make_anchor(PlacementSolution&& sol) {
    AnchorPoint a;
    a.azp = sol.control.objective.azp;
    a.scc_indicator = sol.control.objective.scc_indicator;
    a.scc_sigmoid = sol.control.objective.scc_sigmoid;
    a.solution = std::move(sol);
    return a;
}

ParetoPoint point_from(double omega, const PlacementSolution& sol, const Normalization& norm) {
    ParetoPoint p;
    p.omega = omega;
    p.azp = sol.control.objective.azp;
    p.scc_indicator = sol.control.objective.scc_indicator;
    p.scc_sigmoid = sol.control.objective.scc_sigmoid;
    double da = norm.azp_at_scc_anchor - norm.azp_at_azp_anchor;
    double ds = norm.scc_at_scc_anchor - norm.scc_at_azp_anchor;
    if (std::abs(da) < 1e-12) da = da >= 0 ? 1e-12 : -1e-12;
    if (std::abs(ds) < 1e-12) ds = ds >= 0 ? 1e-12 : -1e-12;
    p.azp_norm = (p.azp - norm.azp_at_azp_anchor) / da;
    p.scc_norm = (norm.scc_at_scc_anchor - p.scc_sigmoid) / ds;
    p.config = sol.config;
    p.settings = sol.control.settings;
    p.solved = true;
    return p;
}

} // namespace

AnchorSet compute_anchors(const NetworkSolver& solver, const Scenario& scenario,
                          const DesignSpec& design, const PlacementOptions& opt) {
    ObjectiveSpec azp_obj;
    azp_obj.kind = ObjectiveKind::AZP;
    ObjectiveSpec scc_obj;
    scc_obj.kind = ObjectiveKind::SCC;

    AnchorSet anchors;
    anchors.azp_anchor = make_anchor(solve_for(solver, scenario, design, azp_obj, opt));
    anchors.scc_anchor = make_anchor(solve_for(solver, scenario, design, scc_obj, opt));
    anchors.utopia_azp = std::min(anchors.azp_anchor.azp, anchors.scc_anchor.azp);
    anchors.utopia_scc_sigmoid =
        std::max(anchors.azp_anchor.scc_sigmoid, anchors.scc_anchor.scc_sigmoid);
    return anchors;
}

std::vector<double> default_weights(int n) {
    if (n < 2) throw DomainError("default_weights: need at least 2 weights");
    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) w[k] = static_cast<double>(k) / (n - 1);
    return w;
}

std::vector<ParetoPoint> weighted_sum_front(const NetworkSolver& solver, const Scenario& scenario,
                                            const DesignSpec& design, const AnchorSet& anchors,
                                            const std::vector<double>& weights,
                                            const PlacementOptions& opt) {
    const Normalization norm = anchors.normalization();
    std::vector<ParetoPoint> points;
    points.reserve(weights.size());
    for (double omega : weights) {
        if (omega < -1e-12 || omega > 1.0 + 1e-12)
            throw DomainError("weighted_sum_front: weight outside [0,1]");
        if (omega <= 1e-12) {
            points.push_back(point_from(0.0, anchors.azp_anchor.solution, norm));
            continue;
        }
        if (omega >= 1.0 - 1e-12) {
            points.push_back(point_from(1.0, anchors.scc_anchor.solution, norm));
            continue;
        }
        ObjectiveSpec obj;
        obj.kind = ObjectiveKind::Weighted;
        obj.omega = omega;
        obj.norm = norm;
        try {
            points.push_back(
                point_from(omega, solve_for(solver, scenario, design, obj, opt), norm));
        } catch (const std::runtime_error& e) {
            ParetoPoint p;
            p.omega = omega;
            p.error = e.what();
            points.push_back(std::move(p));
        }
    }
    return points;
}

std::vector<int> non_dominated_indices(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    // first coordinate ascending, second descending, input order last
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[a].first != points[b].first) return points[a].first < points[b].first;
        if (points[a].second != points[b].second) return points[a].second > points[b].second;
        return a < b;
    });
    std::vector<int> keep;
    double best_second = -kInf;
    for (int idx : order) {
        if (points[idx].second > best_second) {
            keep.push_back(idx);
            best_second = points[idx].second;
        }
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint>& points) {
    std::vector<std::pair<double, double>> coords;
    std::vector<int> solved_idx;
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        if (points[i].solved) {
            coords.emplace_back(points[i].azp, points[i].scc_indicator);
            solved_idx.push_back(i);
        }
    std::vector<int> keep = non_dominated_indices(coords);
    for (int i : solved_idx) points[i].dominated = true;
    std::vector<ParetoPoint> survivors;
    for (int k : keep) {
        points[solved_idx[k]].dominated = false;
        survivors.push_back(points[solved_idx[k]]);
    }
    return survivors;
}

ValveConfig hierarchical_design(const NetworkSolver& solver, const Scenario& scenario, int n_v,
                                int n_f, const PlacementOptions& opt) {
    ObjectiveSpec azp_obj;
    azp_obj.kind = ObjectiveKind::AZP;
    PlacementSolution stage1;
    try {
        stage1 = solve_vp_minlp(solver, scenario, n_v, 0, azp_obj, opt);
    } catch (const std::runtime_error& e) {
        throw InfeasibleError(std::string("hierarchical design, stage 1 (PCV placement): ") +
                              e.what());
    }
    ValveConfig config = stage1.config;
    config.directions.clear();
    if (n_f == 0) return config;

    ObjectiveSpec scc_obj;
    scc_obj.kind = ObjectiveKind::SCC;
    PlacementOptions stage2_opt = opt;
    stage2_opt.fixed_pcv_links = config.pcv_links;
    try {
        PlacementSolution stage2 = solve_vp_minlp(solver, scenario, n_v, n_f, scc_obj, stage2_opt);
        config.afv_nodes = stage2.config.afv_nodes;
    } catch (const std::runtime_error& e) {
        throw InfeasibleError(std::string("hierarchical design, stage 2 (AFV placement): ") +
                              e.what());
    }
    return config;
}

} // namespace wdn
