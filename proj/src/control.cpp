// SPDX-License-Identifier: MIT
#include "wdn/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wdn {

double ObjectiveSpec::scalar(double azp_value, double scc_sigmoid_value) const {
    switch (kind) {
        case ObjectiveKind::AZP:
            return azp_value;
        case ObjectiveKind::SCC:
            return -scc_sigmoid_value;
        case ObjectiveKind::Weighted: {
            double da = norm.azp_at_scc_anchor - norm.azp_at_azp_anchor;
            double ds = norm.scc_at_scc_anchor - norm.scc_at_azp_anchor;
            if (std::abs(da) < 1e-12) da = da >= 0 ? 1e-12 : -1e-12;
            if (std::abs(ds) < 1e-12) ds = ds >= 0 ? 1e-12 : -1e-12;
            double f1 = (azp_value - norm.azp_at_azp_anchor) / da;
            double f2 = (norm.scc_at_scc_anchor - scc_sigmoid_value) / ds;
            return (1.0 - omega) * f1 + omega * f2;
        }
    }
    return 0.0;
}

namespace {

struct StepScp {
    const NetworkSolver& solver;
    const NetworkModel& model;
    const Scenario& scenario;
    const ValveConfig& config;
    const ObjectiveSpec& obj;
    const ScpOptions& opt;
    int t;
    int m;       // number of controls
    Vec lb, ub;  // control bounds

    Vec make_eta(const Vec& u) const {
        Vec eta = Vec::Zero(model.np());
        for (int k = 0; k < config.n_v(); ++k) eta[config.pcv_links[k]] = u[k];
        return eta;
    }
    Vec make_alpha(const Vec& u) const {
        Vec alpha = Vec::Zero(model.nn());
        for (int k = 0; k < config.n_f(); ++k) alpha[config.afv_nodes[k]] = u[config.n_v() + k];
        return alpha;
    }

    StepSolution simulate(const Vec& u) const {
        return solver.solve_step(scenario.demands.row(t).transpose(),
                                 scenario.source_heads.row(t).transpose(), make_eta(u),
                                 make_alpha(u), HeadLossModel::QA, opt.hydraulics);
    }

    // per-step scalar objective and its gradient w.r.t. (q, h)
    double objective(const Vec& q, const Vec& h, Vec* gq = nullptr, Vec* gh = nullptr) const {
        double azp_t = 0.0;
        for (int i = 0; i < model.nn(); ++i)
            azp_t += model.nodes[i].azp_weight * (h[i] - model.nodes[i].elevation);
        double scc_t = 0.0;
        for (int j = 0; j < model.np(); ++j) {
            const Link& link = model.links[j];
            scc_t += link.scc_weight * scc_sigmoid_term(q[j] / link.area, link.u_min, obj.rho);
        }
        double w_azp = 0.0, w_scc = 0.0; // d scalar / d azp_t, d scalar / d scc_t
        switch (obj.kind) {
            case ObjectiveKind::AZP:
                w_azp = 1.0;
                break;
            case ObjectiveKind::SCC:
                w_scc = -1.0;
                break;
            case ObjectiveKind::Weighted: {
                double da = obj.norm.azp_at_scc_anchor - obj.norm.azp_at_azp_anchor;
                double ds = obj.norm.scc_at_scc_anchor - obj.norm.scc_at_azp_anchor;
                if (std::abs(da) < 1e-12) da = da >= 0 ? 1e-12 : -1e-12;
                if (std::abs(ds) < 1e-12) ds = ds >= 0 ? 1e-12 : -1e-12;
                w_azp = (1.0 - obj.omega) / da;
                w_scc = -obj.omega / ds;
                break;
            }
        }
        if (gh) {
            gh->setZero(model.nn());
            for (int i = 0; i < model.nn(); ++i) (*gh)[i] = w_azp * model.nodes[i].azp_weight;
        }
        if (gq) {
            gq->setZero(model.np());
            if (w_scc != 0.0)
                for (int j = 0; j < model.np(); ++j) {
                    const Link& link = model.links[j];
                    double u_vel = q[j] / link.area;
                    double pp = 1.0 / (1.0 + std::exp(-obj.rho * (u_vel - link.u_min)));
                    double pn = 1.0 / (1.0 + std::exp(-obj.rho * (-u_vel - link.u_min)));
                    double ds_du = obj.rho * (pp * (1.0 - pp) - pn * (1.0 - pn));
                    (*gq)[j] = w_scc * link.scc_weight * ds_du / link.area;
                }
        }
        return obj.scalar(azp_t, scc_t);
    }

    struct Row {
        double g;       // scaled constraint value, feasible when <= 0
        int kind;       // 0: h_lo, 1: h_hi, 2: q_lo, 3: q_hi, 4: pcv sign
        int index;      // node or link
    };

    std::vector<Row> constraints(const Vec& q, const Vec& h) const {
        const BoundsSet& b = scenario.bounds;
        std::vector<Row> rows;
        rows.reserve(2 * model.nn() + 2 * model.np() + config.n_v());
        for (int i = 0; i < model.nn(); ++i) {
            rows.push_back({b.h_lo(t, i) - h[i], 0, i});
            rows.push_back({h[i] - b.h_hi(t, i), 1, i});
        }
        for (int j = 0; j < model.np(); ++j) {
            double a = model.links[j].area;
            rows.push_back({(b.q_lo(t, j) - q[j]) / a, 2, j});
            rows.push_back({(q[j] - b.q_hi(t, j)) / a, 3, j});
        }
        for (int k = 0; k < config.n_v(); ++k) {
            int j = config.pcv_links[k];
            double a = model.links[j].area;
            rows.push_back({-config.directions[k] * q[j] / a, 4, j});
        }
        return rows;
    }

    // gradient of row r w.r.t. controls, given state sensitivities
    Vec row_gradient(const Row& row, const StepSensitivity& sens) const {
        switch (row.kind) {
            case 0: return -sens.dh.row(row.index).transpose();
            case 1: return sens.dh.row(row.index).transpose();
            case 2: return Vec(-sens.dq.row(row.index).transpose() / model.links[row.index].area);
            case 3: return Vec(sens.dq.row(row.index).transpose() / model.links[row.index].area);
            default: {
                int k = static_cast<int>(std::find(config.pcv_links.begin(), config.pcv_links.end(),
                                                   row.index) -
                                         config.pcv_links.begin());
                return Vec(-config.directions[k] * sens.dq.row(row.index).transpose() /
                           model.links[row.index].area);
            }
        }
    }

    std::string row_name(const Row& row) const {
        std::ostringstream os;
        switch (row.kind) {
            case 0: os << "h_min at node '" << model.nodes[row.index].id << "'"; break;
            case 1: os << "h_max at node '" << model.nodes[row.index].id << "'"; break;
            case 2: os << "q_min at link '" << model.links[row.index].id << "'"; break;
            case 3: os << "q_max at link '" << model.links[row.index].id << "'"; break;
            default: os << "flow direction at PCV link '" << model.links[row.index].id << "'";
        }
        os << " step " << t;
        return os.str();
    }

    static double total_violation(const std::vector<Row>& rows) {
        double v = 0.0;
        for (const auto& r : rows) v += std::max(0.0, r.g);
        return v;
    }
};

struct StepResult {
    Vec u;
    bool converged = false;
    int iterations = 0;
};

StepResult solve_step_scp(StepScp& sp, Vec u) {
    const int m = sp.m;
    u = u.cwiseMax(sp.lb).cwiseMin(sp.ub);
    StepSolution state;
    try {
        state = sp.simulate(u);
    } catch (const ConvergenceError&) {
        u.setZero();
        u = u.cwiseMax(sp.lb).cwiseMin(sp.ub);
        state = sp.simulate(u);
    }

    Vec radius = sp.opt.initial_radius_frac * (sp.ub - sp.lb);
    for (int k = 0; k < m; ++k) radius[k] = std::max(radius[k], 1e-9);
    const Vec radius_cap = sp.ub - sp.lb;

    Vec gq, gh;
    double f = sp.objective(state.q, state.h, &gq, &gh);
    auto rows = sp.constraints(state.q, state.h);
    double viol = StepScp::total_violation(rows);
    const double mu = sp.opt.penalty;

    StepResult out;
    out.u = u;
    for (int iter = 0; iter < sp.opt.max_iterations; ++iter) {
        out.iterations = iter + 1;
        StepSensitivity sens = sp.solver.sensitivities(state, sp.config.pcv_links, sp.config.afv_nodes);
        Vec grad_f = sens.dq.transpose() * gq + sens.dh.transpose() * gh;

        // active-set filter: rows that could turn violated inside the radius
        std::vector<int> active;
        std::vector<Vec> jrows;
        for (size_t r = 0; r < rows.size(); ++r) {
            Vec jr = sp.row_gradient(rows[r], sens);
            double reach = jr.cwiseAbs().dot(radius);
            if (rows[r].g + reach >= 0.0) {
                active.push_back(static_cast<int>(r));
                jrows.push_back(std::move(jr));
            }
        }
        const int n_act = static_cast<int>(active.size());

        LpProblem lp;
        lp.c.resize(m + n_act);
        lp.c.head(m) = grad_f;
        lp.c.tail(n_act).setConstant(mu);
        lp.lb.resize(m + n_act);
        lp.ub.resize(m + n_act);
        double slack_cap = 0.0;
        for (int r = 0; r < n_act; ++r)
            slack_cap = std::max(slack_cap, rows[active[r]].g + jrows[r].cwiseAbs().dot(radius));
        for (int k = 0; k < m; ++k) {
            lp.lb[k] = std::max(sp.lb[k] - u[k], -radius[k]);
            lp.ub[k] = std::min(sp.ub[k] - u[k], radius[k]);
        }
        lp.lb.tail(n_act).setZero();
        lp.ub.tail(n_act).setConstant(std::max(1.0, 2.0 * slack_cap));
        std::vector<Eigen::Triplet<double>> trip;
        Vec b_ub(n_act);
        for (int r = 0; r < n_act; ++r) {
            for (int k = 0; k < m; ++k)
                if (jrows[r][k] != 0.0) trip.emplace_back(r, k, jrows[r][k]);
            trip.emplace_back(r, m + r, -1.0);
            b_ub[r] = -rows[active[r]].g;
        }
        lp.a_ub.resize(n_act, m + n_act);
        lp.a_ub.setFromTriplets(trip.begin(), trip.end());
        lp.b_ub = b_ub;
        lp.a_eq.resize(0, m + n_act);
        lp.b_eq.resize(0);

        LpResult sol = solve_lp(lp);
        Vec d = sol.x.head(m);
        double active_viol = 0.0;
        for (int r = 0; r < n_act; ++r) active_viol += std::max(0.0, rows[active[r]].g);
        double pred_red = mu * active_viol - (grad_f.dot(d) + mu * sol.x.tail(n_act).sum());

        double merit = f + mu * viol;
        if (pred_red <= sp.opt.rel_tol * (1.0 + std::abs(merit)) &&
            d.lpNorm<Eigen::Infinity>() <= 1e-6) {
            // fixed point of the convexified map
            if (viol > sp.opt.feas_tol) {
                // locate worst row
                size_t worst = 0;
                for (size_t r = 1; r < rows.size(); ++r)
                    if (rows[r].g > rows[worst].g) worst = r;
                throw InfeasibleError("control subproblem infeasible at step " +
                                          std::to_string(sp.t) + ": " + sp.row_name(rows[worst]) +
                                          " violated by " + std::to_string(rows[worst].g),
                                      sp.row_name(rows[worst]));
            }
            out.converged = true;
            break;
        }

        bool trial_ok = true;
        StepSolution trial_state;
        double f_new = 0.0, viol_new = 0.0;
        Vec gq_new, gh_new;
        std::vector<StepScp::Row> rows_new;
        try {
            trial_state = sp.simulate(u + d);
            f_new = sp.objective(trial_state.q, trial_state.h, &gq_new, &gh_new);
            rows_new = sp.constraints(trial_state.q, trial_state.h);
            viol_new = StepScp::total_violation(rows_new);
        } catch (const ConvergenceError&) {
            trial_ok = false;
        }

        double ratio = -1.0;
        if (trial_ok && pred_red > 0.0)
            ratio = (merit - (f_new + mu * viol_new)) / pred_red;

        if (trial_ok && ratio >= sp.opt.ratio_reject) {
            double improvement = merit - (f_new + mu * viol_new);
            u += d;
            state = std::move(trial_state);
            f = f_new;
            gq = std::move(gq_new);
            gh = std::move(gh_new);
            rows = std::move(rows_new);
            viol = viol_new;
            out.u = u;
            if (ratio > sp.opt.ratio_expand)
                radius = (radius * sp.opt.expand).cwiseMin(radius_cap);
            else if (ratio < sp.opt.ratio_shrink)
                radius *= sp.opt.shrink;
            if (improvement <= sp.opt.rel_tol * (1.0 + std::abs(merit)) && viol <= sp.opt.feas_tol) {
                out.converged = true;
                break;
            }
        } else {
            radius *= sp.opt.shrink;
            if (radius.maxCoeff() < 1e-12) {
                out.converged = viol <= sp.opt.feas_tol;
                break;
            }
        }
    }
    if (out.converged && viol > sp.opt.feas_tol) out.converged = false;
    return out;
}

} // namespace

ControlSolution solve_vc_nlp(const NetworkSolver& solver, const Scenario& scenario,
                             const ValveConfig& config, const ObjectiveSpec& objective,
                             const std::optional<ControlSettings>& start, const ScpOptions& opt) {
    const NetworkModel& model = solver.model();
    const int n_t = scenario.n_t;
    const int n_v = config.n_v(), n_f = config.n_f();
    if (static_cast<int>(config.directions.size()) != n_v)
        throw DomainError("solve_vc_nlp: one direction per PCV required");

    ControlSolution out;
    out.settings = ControlSettings::zeros(n_t, model.np(), model.nn());
    out.converged = true;

    const int m = n_v + n_f;
    if (m > 0) {
        for (int t = 0; t < n_t; ++t) {
            StepScp sp{solver, model, scenario, config, objective, opt, t, m, Vec(m), Vec(m)};
            const BoundsSet& b = scenario.bounds;
            for (int k = 0; k < n_v; ++k) {
                int j = config.pcv_links[k];
                if (config.directions[k] > 0) {
                    sp.lb[k] = 0.0;
                    sp.ub[k] = std::max(0.0, b.eta_hi(t, j));
                } else {
                    sp.lb[k] = std::min(0.0, b.eta_lo(t, j));
                    sp.ub[k] = 0.0;
                }
            }
            for (int k = 0; k < n_f; ++k) {
                sp.lb[n_v + k] = 0.0;
                sp.ub[n_v + k] = b.alpha_hi(t, config.afv_nodes[k]);
            }

            Vec u0 = Vec::Zero(m);
            if (start) {
                for (int k = 0; k < n_v; ++k) u0[k] = start->eta(t, config.pcv_links[k]);
                for (int k = 0; k < n_f; ++k) u0[n_v + k] = start->alpha(t, config.afv_nodes[k]);
            }
            StepResult step = solve_step_scp(sp, u0);
            out.iterations += step.iterations;
            out.converged = out.converged && step.converged;
            for (int k = 0; k < n_v; ++k) out.settings.eta(t, config.pcv_links[k]) = step.u[k];
            for (int k = 0; k < n_f; ++k)
                out.settings.alpha(t, config.afv_nodes[k]) = step.u[n_v + k];
        }
    }

    // exact-model reporting: re-solve hydraulics with the native head loss
    out.state = solver.solve_eps(scenario, out.settings, HeadLossModel::HW, opt.hydraulics);
    ObjectiveParams params;
    params.rho = objective.rho;
    out.objective = evaluate_objectives(model, out.state, params);
    out.scalar_objective = objective.scalar(out.objective.azp, out.objective.scc_sigmoid);

    // internal (QA) objective for the gap record
    if (m > 0) {
        HydraulicState qa_state =
            solver.solve_eps(scenario, out.settings, HeadLossModel::QA, opt.hydraulics);
        ObjectiveValue qa_val = evaluate_objectives(model, qa_state, params);
        out.qa_objective = objective.scalar(qa_val.azp, qa_val.scc_sigmoid);
    } else {
        out.qa_objective = out.scalar_objective;
    }
    out.qa_hw_gap = std::abs(out.qa_objective - out.scalar_objective) /
                    std::max(std::abs(out.scalar_objective), 1e-9);

    // feasibility on the exact state
    out.max_violation = 0.0;
    for (int t = 0; t < n_t; ++t) {
        StepScp sp{solver, model, scenario, config, objective, opt, t, m, Vec(), Vec()};
        auto rows = sp.constraints(out.state.q.row(t).transpose(), out.state.h.row(t).transpose());
        for (const auto& row : rows)
            if (row.g > out.max_violation) {
                out.max_violation = row.g;
                out.most_violated = sp.row_name(row);
            }
    }
    out.feasible = out.max_violation <= opt.feas_tol_exact;
    return out;
}

DirectionSweep enumerate_directions(const NetworkSolver& solver, const Scenario& scenario,
                                    ValveConfig config, const ObjectiveSpec& objective,
                                    const std::optional<ControlSettings>& start,
                                    const ScpOptions& opt, int enum_cap) {
    const int n_v = config.n_v();
    if (n_v > enum_cap)
        throw DomainError("enumerate_directions: n_v=" + std::to_string(n_v) + " exceeds cap " +
                          std::to_string(enum_cap) + "; supply explicit directions");
    DirectionSweep sweep;
    bool have_best = false;
    std::string last_error = "no direction assignment evaluated";
    const long assignments = 1L << n_v;
    for (long mask = 0; mask < assignments; ++mask) {
        config.directions.assign(n_v, +1);
        for (int k = 0; k < n_v; ++k)
            if (mask & (1L << k)) config.directions[k] = -1;
        DirectionSweepEntry entry;
        entry.directions = config.directions;
        try {
            ControlSolution sol = solve_vc_nlp(solver, scenario, config, objective, start, opt);
            entry.scalar_objective = sol.scalar_objective;
            entry.feasible = sol.feasible;
            if (sol.feasible && (!have_best || sol.scalar_objective < sweep.best.scalar_objective)) {
                sweep.best = std::move(sol);
                sweep.best_directions = config.directions;
                have_best = true;
            }
        } catch (const InfeasibleError& e) {
            entry.feasible = false;
            last_error = e.what();
        }
        sweep.entries.push_back(std::move(entry));
    }
    if (!have_best)
        throw InfeasibleError("all direction assignments infeasible: " + last_error);
    return sweep;
}

} // namespace wdn
