// SPDX-License-Identifier: MIT
#include "wdn/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace wdn {

namespace {

Scenario slice_scenario(const Scenario& scenario, const Window& w) {
    Scenario s = scenario;
    s.n_t = w.length();
    s.demands = scenario.demands.middleRows(w.begin, w.length());
    s.source_heads = scenario.source_heads.middleRows(w.begin, w.length());
    auto rows = [&](const Mat& m) { return Mat(m.middleRows(w.begin, w.length())); };
    s.bounds.q_lo = rows(scenario.bounds.q_lo);
    s.bounds.q_hi = rows(scenario.bounds.q_hi);
    s.bounds.h_lo = rows(scenario.bounds.h_lo);
    s.bounds.h_hi = rows(scenario.bounds.h_hi);
    s.bounds.eta_lo = rows(scenario.bounds.eta_lo);
    s.bounds.eta_hi = rows(scenario.bounds.eta_hi);
    s.bounds.theta_lo = rows(scenario.bounds.theta_lo);
    s.bounds.theta_hi = rows(scenario.bounds.theta_hi);
    s.bounds.alpha_hi = rows(scenario.bounds.alpha_hi);
    return s;
}

Window demand_extreme_window(const Scenario& scenario, double hours, bool peak) {
    int steps = std::max(1, static_cast<int>(std::lround(hours * 60.0 / scenario.step_minutes)));
    steps = std::min(steps, scenario.n_t);
    int best = 0;
    double best_total = peak ? -kInf : kInf;
    for (int t = 0; t + steps <= scenario.n_t; ++t) {
        double total = scenario.demands.middleRows(t, steps).sum();
        if (peak ? total > best_total : total < best_total) {
            best_total = total;
            best = t;
        }
    }
    return {best, best + steps};
}

} // namespace

Window peak_demand_window(const Scenario& scenario, double hours) {
    return demand_extreme_window(scenario, hours, true);
}

Window min_demand_window(const Scenario& scenario, double hours) {
    return demand_extreme_window(scenario, hours, false);
}

AdaptivePlan build_plan(const NetworkSolver& solver, const Scenario& scenario,
                        const ValveConfig& config, const Window& scc_window,
                        const ScpOptions& opt, const ControlSolution* azp_base) {
    if (scc_window.begin < 0 || scc_window.end > scenario.n_t ||
        scc_window.begin > scc_window.end)
        throw DomainError("build_plan: window [" + std::to_string(scc_window.begin) + ", " +
                          std::to_string(scc_window.end) + ") outside horizon of " +
                          std::to_string(scenario.n_t) + " steps");

    ObjectiveSpec azp_obj;
    azp_obj.kind = ObjectiveKind::AZP;
    ControlSolution base;
    if (azp_base) base = *azp_base;
    else base = solve_vc_nlp(solver, scenario, config, azp_obj, {}, opt);

    AdaptivePlan plan;
    plan.window = scc_window;
    plan.mode_per_step.assign(scenario.n_t, ControlMode::AZP);
    plan.settings = base.settings;

    if (scc_window.length() > 0) {
        ObjectiveSpec scc_obj;
        scc_obj.kind = ObjectiveKind::SCC;
        Scenario window_scenario = slice_scenario(scenario, scc_window);
        // The SCC objective is nearly flat in the valve losses, so the local
        // solve is sensitive to its starting point: a throttled start pins the
        // solution to low pressures and masks the pressure swing the mode
        // switch is meant to expose. Solve from two deterministic starts --
        // neutral (valves open, no flushing) and flush-heavy (valves open,
        // flushing at its caps) -- and keep the better feasible solution.
        const NetworkModel& model = solver.model();
        ControlSettings flush_seed =
            ControlSettings::zeros(window_scenario.n_t, model.np(), model.nn());
        for (int j : config.afv_nodes)
            flush_seed.alpha.col(j) = window_scenario.bounds.alpha_hi.col(j);
        ControlSolution scc_sol =
            solve_vc_nlp(solver, window_scenario, config, scc_obj, {}, opt);
        ControlSolution scc_alt =
            solve_vc_nlp(solver, window_scenario, config, scc_obj, flush_seed, opt);
        if (scc_alt.feasible &&
            (!scc_sol.feasible ||
             scc_alt.objective.scc_sigmoid > scc_sol.objective.scc_sigmoid))
            scc_sol = std::move(scc_alt);
        plan.settings.eta.middleRows(scc_window.begin, scc_window.length()) =
            scc_sol.settings.eta;
        plan.settings.alpha.middleRows(scc_window.begin, scc_window.length()) =
            scc_sol.settings.alpha;
        for (int t = scc_window.begin; t < scc_window.end; ++t)
            plan.mode_per_step[t] = ControlMode::SCC;
    }

    plan.state = solver.solve_eps(scenario, plan.settings, HeadLossModel::HW, opt.hydraulics);
    plan.metrics = evaluate_objectives(solver.model(), plan.state);
    plan.pv = pressure_variation(plan.state);
    plan.pv_stats = nodal_pressure_ranges(solver.model(), plan.state);

    if (scc_window.length() > 0) {
        plan.window_azp =
            plan.metrics.azp_per_step.segment(scc_window.begin, scc_window.length()).mean();
        plan.window_scc = plan.metrics.scc_indicator_per_step
                              .segment(scc_window.begin, scc_window.length())
                              .mean();
    }

    plan.setting_delta = Vec::Zero(scenario.n_t);
    for (int t = 1; t < scenario.n_t; ++t) {
        double d_eta =
            (plan.settings.eta.row(t) - plan.settings.eta.row(t - 1)).cwiseAbs().maxCoeff();
        double d_alpha =
            (plan.settings.alpha.row(t) - plan.settings.alpha.row(t - 1)).cwiseAbs().maxCoeff();
        plan.setting_delta[t] = std::max(d_eta, d_alpha);
    }
    return plan;
}

ScenarioComparison compare_scenarios(const NetworkSolver& solver, const Scenario& scenario,
                                     const ValveConfig& config, std::vector<Window> windows,
                                     const ScpOptions& opt) {
    if (windows.empty())
        windows = {peak_demand_window(scenario), min_demand_window(scenario)};

    ObjectiveSpec azp_obj;
    azp_obj.kind = ObjectiveKind::AZP;
    ControlSolution base = solve_vc_nlp(solver, scenario, config, azp_obj, {}, opt);

    ScenarioComparison out;
    out.plans.push_back(build_plan(solver, scenario, config, Window{0, 0}, opt, &base));
    for (const Window& w : windows)
        out.plans.push_back(build_plan(solver, scenario, config, w, opt, &base));
    return out;
}

} // namespace wdn
