// SPDX-License-Identifier: MIT
#include "wdn/placement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace wdn {

namespace {

struct Line {
    double slope, intercept;
};

// Linear under-estimators of the S-shaped QA head-loss curve
// phi(q) = q (a|q| + b) on [lo, hi]: tangents on the convex side, the
// secant where the curve is concave over the interval.
std::vector<Line> under_cuts(double a, double b, double lo, double hi) {
    auto phi = [&](double q) { return q * (a * std::abs(q) + b); };
    if (hi - lo < 1e-14) return {{2.0 * a * std::abs(lo) + b, phi(lo) - (2.0 * a * std::abs(lo) + b) * lo}};
    if (a <= 1e-14) return {{b, 0.0}};

    auto tangent = [&](double t) {
        double s = 2.0 * a * std::abs(t) + b;
        return Line{s, phi(t) - s * t};
    };
    auto secant = [&](double p, double q) {
        double s = (phi(q) - phi(p)) / (q - p);
        return Line{s, phi(p) - s * p};
    };

    std::vector<Line> cuts;
    if (lo >= 0.0) {
        // convex segment: tangents are global under-estimators
        for (int k = 0; k < 4; ++k) cuts.push_back(tangent(lo + (hi - lo) * k / 3.0));
    } else if (hi <= 0.0) {
        // concave segment: the chord lies below the curve
        cuts.push_back(secant(lo, hi));
    } else {
        // mixed: tangents at t >= tau pass under the left endpoint, where
        // tau is the tangency abscissa of the line through (lo, phi(lo))
        double tau = (std::sqrt(2.0) - 1.0) * (-lo);
        if (tau >= hi) {
            cuts.push_back(secant(lo, hi));
        } else {
            for (int k = 0; k < 4; ++k) cuts.push_back(tangent(tau + (hi - tau) * k / 3.0));
        }
    }
    return cuts;
}

// Over-estimators by the odd symmetry phi(-q) = -phi(q).
std::vector<Line> over_cuts(double a, double b, double lo, double hi) {
    std::vector<Line> cuts = under_cuts(a, b, -hi, -lo);
    for (Line& c : cuts) c.intercept = -c.intercept;
    return cuts;
}

// Concave piecewise-linear over-estimator of the smooth self-cleaning
// indicator g(u) = psi+(u) + psi-(u) on [u_lo, u_hi]: upper hull of a dense
// sample, lifted by a curvature margin so the lines clear the function
// between samples.
std::vector<Line> scc_over_cuts(double u_lo, double u_hi, double u_min, double rho) {
    auto g = [&](double u) { return scc_sigmoid_term(u, u_min, rho); };
    if (u_hi - u_lo < 1e-12) return {{0.0, g(u_lo) + 1e-9}};

    constexpr int kSamples = 401;
    const double du = (u_hi - u_lo) / (kSamples - 1);
    std::vector<std::pair<double, double>> pts(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        double u = u_lo + i * du;
        pts[i] = {u, g(u)};
    }
    // upper hull, monotone chain
    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        while (hull.size() >= 2) {
            const auto& o = hull[hull.size() - 2];
            const auto& m = hull.back();
            double cross = (m.first - o.first) * (p.second - o.second) -
                           (m.second - o.second) * (p.first - o.first);
            if (cross >= 0.0) hull.pop_back();
            else break;
        }
        hull.push_back(p);
    }
    // |g''| <= 2 * 0.0963 * rho^2; chord sag between samples <= g'' du^2 / 8
    const double margin = 0.1926 * rho * rho * du * du / 8.0 + 1e-12;

    std::vector<Line> cuts;
    const int n_seg = static_cast<int>(hull.size()) - 1;
    const int max_cuts = 8;
    for (int k = 0; k < std::min(n_seg, max_cuts); ++k) {
        int i = n_seg <= max_cuts ? k : k * (n_seg - 1) / (max_cuts - 1);
        const auto& p1 = hull[i];
        const auto& p2 = hull[i + 1];
        double s = (p2.second - p1.second) / (p2.first - p1.first);
        cuts.push_back({s, p1.second - s * p1.first + margin});
    }
    if (cuts.empty()) cuts.push_back({0.0, std::max(g(u_lo), g(u_hi)) + margin});
    return cuts;
}

struct ScalarWeights {
    double w_azp = 0.0, w_scc = 0.0, constant = 0.0;
};

ScalarWeights scalar_weights(const ObjectiveSpec& obj) {
    ScalarWeights w;
    switch (obj.kind) {
        case ObjectiveKind::AZP: w.w_azp = 1.0; break;
        case ObjectiveKind::SCC: w.w_scc = -1.0; break;
        case ObjectiveKind::Weighted: {
            double da = obj.norm.azp_at_scc_anchor - obj.norm.azp_at_azp_anchor;
            double ds = obj.norm.scc_at_scc_anchor - obj.norm.scc_at_azp_anchor;
            if (std::abs(da) < 1e-12) da = da >= 0 ? 1e-12 : -1e-12;
            if (std::abs(ds) < 1e-12) ds = ds >= 0 ? 1e-12 : -1e-12;
            w.w_azp = (1.0 - obj.omega) / da;
            w.w_scc = -obj.omega / ds;
            w.constant = -(1.0 - obj.omega) * obj.norm.azp_at_azp_anchor / da +
                         obj.omega * obj.norm.scc_at_scc_anchor / ds;
            break;
        }
    }
    return w;
}

} // namespace

RelaxedProblem build_relaxation(const NetworkModel& model, const Scenario& scenario, int n_v,
                                int n_f, const ObjectiveSpec& objective,
                                const PlacementOptions& opt) {
    const int n_p = model.np(), n_n = model.nn();
    int pcv_cands = 0, afv_cands = 0;
    for (const Link& link : model.links) pcv_cands += link.is_pcv_candidate ? 1 : 0;
    for (const Node& node : model.nodes) afv_cands += node.is_afv_candidate ? 1 : 0;
    if (n_v < 0 || n_v > pcv_cands)
        throw DomainError("build_relaxation: n_v=" + std::to_string(n_v) + " exceeds the " +
                          std::to_string(pcv_cands) + " candidate links");
    if (n_f < 0 || n_f > afv_cands)
        throw DomainError("build_relaxation: n_f=" + std::to_string(n_f) + " exceeds the " +
                          std::to_string(afv_cands) + " candidate nodes");
    for (const Link& link : model.links)
        if (link.resistance > 0.0 && link.qa_a == 0.0 && link.qa_b == 0.0)
            throw DomainError("build_relaxation: QA coefficients not fitted for link '" +
                              link.id + "'");
    if (!opt.fixed_pcv_links.empty() &&
        static_cast<int>(opt.fixed_pcv_links.size()) != n_v)
        throw DomainError("build_relaxation: fixed PCV set size differs from n_v");

    const ScalarWeights w = scalar_weights(objective);
    const bool with_scc = w.w_scc != 0.0;

    RelaxedProblem rp;
    rp.model = &model;
    rp.scenario = &scenario;
    rp.objective = objective;
    rp.n_v = n_v;
    rp.n_f = n_f;
    rp.off_q = 0;
    rp.off_h = n_p;
    rp.off_theta = rp.off_h + n_n;
    rp.off_eta = rp.off_theta + n_p;
    rp.off_alpha = rp.off_eta + n_p;
    rp.off_z = rp.off_alpha + n_n;
    rp.off_y = rp.off_z + n_p;
    rp.off_s = rp.off_y + n_n;
    rp.n_var = rp.off_s + (with_scc ? n_p : 0);

    const BoundsSet& bounds = scenario.bounds;
    double azp_const = 0.0;
    for (const Node& node : model.nodes) azp_const -= w.w_azp * node.azp_weight * node.elevation;

    rp.steps.reserve(scenario.n_t);
    rp.constant.assign(scenario.n_t, azp_const + w.constant);
    for (int t = 0; t < scenario.n_t; ++t) {
        LpProblem lp;
        lp.c = Vec::Zero(rp.n_var);
        lp.lb = Vec::Zero(rp.n_var);
        lp.ub = Vec::Zero(rp.n_var);
        for (int j = 0; j < n_p; ++j) {
            lp.lb[rp.off_q + j] = bounds.q_lo(t, j);
            lp.ub[rp.off_q + j] = bounds.q_hi(t, j);
            lp.lb[rp.off_theta + j] = bounds.theta_lo(t, j);
            lp.ub[rp.off_theta + j] = bounds.theta_hi(t, j);
            bool cand = model.links[j].is_pcv_candidate;
            if (!opt.fixed_pcv_links.empty()) {
                bool fixed = std::find(opt.fixed_pcv_links.begin(), opt.fixed_pcv_links.end(),
                                       j) != opt.fixed_pcv_links.end();
                lp.lb[rp.off_z + j] = fixed ? 1.0 : 0.0;
                lp.ub[rp.off_z + j] = fixed ? 1.0 : 0.0;
                cand = fixed;
            } else {
                lp.ub[rp.off_z + j] = cand ? 1.0 : 0.0;
            }
            if (cand) {
                lp.lb[rp.off_eta + j] = bounds.eta_lo(t, j);
                lp.ub[rp.off_eta + j] = bounds.eta_hi(t, j);
            }
            if (with_scc) lp.ub[rp.off_s + j] = 1.1;
        }
        for (int i = 0; i < n_n; ++i) {
            lp.lb[rp.off_h + i] = bounds.h_lo(t, i);
            lp.ub[rp.off_h + i] = bounds.h_hi(t, i);
            lp.ub[rp.off_alpha + i] = bounds.alpha_hi(t, i);
            lp.ub[rp.off_y + i] = model.nodes[i].is_afv_candidate ? 1.0 : 0.0;
        }

        // objective
        for (int i = 0; i < n_n; ++i) lp.c[rp.off_h + i] = w.w_azp * model.nodes[i].azp_weight;
        if (with_scc)
            for (int j = 0; j < n_p; ++j) lp.c[rp.off_s + j] = w.w_scc * model.links[j].scc_weight;

        // equalities: energy per link, mass per junction, valve counts
        const int n_eq = n_p + n_n + 2;
        std::vector<Eigen::Triplet<double>> eq;
        Vec b_eq = Vec::Zero(n_eq);
        for (int k = 0; k < model.a12.outerSize(); ++k)
            for (SpMat::InnerIterator it(model.a12, k); it; ++it) {
                eq.emplace_back(static_cast<int>(it.row()), rp.off_h + static_cast<int>(it.col()),
                                it.value());
                eq.emplace_back(n_p + static_cast<int>(it.col()),
                                rp.off_q + static_cast<int>(it.row()), it.value());
            }
        for (int j = 0; j < n_p; ++j) {
            eq.emplace_back(j, rp.off_theta + j, 1.0);
            eq.emplace_back(j, rp.off_eta + j, 1.0);
        }
        for (int k = 0; k < model.a10.outerSize(); ++k)
            for (SpMat::InnerIterator it(model.a10, k); it; ++it)
                b_eq[it.row()] -= it.value() * scenario.source_heads(t, it.col());
        for (int i = 0; i < n_n; ++i) {
            eq.emplace_back(n_p + i, rp.off_alpha + i, -1.0);
            b_eq[n_p + i] = scenario.demands(t, i);
        }
        for (int j = 0; j < n_p; ++j) eq.emplace_back(n_p + n_n, rp.off_z + j, 1.0);
        b_eq[n_p + n_n] = n_v;
        for (int i = 0; i < n_n; ++i) eq.emplace_back(n_p + n_n + 1, rp.off_y + i, 1.0);
        b_eq[n_p + n_n + 1] = n_f;
        lp.a_eq.resize(n_eq, rp.n_var);
        lp.a_eq.setFromTriplets(eq.begin(), eq.end());
        lp.b_eq = b_eq;

        // inequalities: head-loss hull, big-M activation, SCC hypograph
        std::vector<Eigen::Triplet<double>> ub_trip;
        std::vector<double> b_ub;
        auto add_row = [&](std::initializer_list<std::pair<int, double>> cols, double rhs) {
            int r = static_cast<int>(b_ub.size());
            for (const auto& [col, v] : cols) ub_trip.emplace_back(r, col, v);
            b_ub.push_back(rhs);
        };
        for (int j = 0; j < n_p; ++j) {
            const Link& link = model.links[j];
            double lo = bounds.q_lo(t, j), hi = bounds.q_hi(t, j);
            // widen the hull by the QA fit error so the exact curve stays inside
            double err = link.qa_max_rel_err *
                         std::max(std::abs(phi_native(link, lo)), std::abs(phi_native(link, hi)));
            for (const Line& c : under_cuts(link.qa_a, link.qa_b, lo, hi))
                add_row({{rp.off_q + j, c.slope}, {rp.off_theta + j, -1.0}},
                        -(c.intercept - err));
            for (const Line& c : over_cuts(link.qa_a, link.qa_b, lo, hi))
                add_row({{rp.off_theta + j, 1.0}, {rp.off_q + j, -c.slope}}, c.intercept + err);
            if (lp.ub[rp.off_eta + j] > 0.0)
                add_row({{rp.off_eta + j, 1.0}, {rp.off_z + j, -lp.ub[rp.off_eta + j]}}, 0.0);
            if (lp.lb[rp.off_eta + j] < 0.0)
                add_row({{rp.off_eta + j, -1.0}, {rp.off_z + j, lp.lb[rp.off_eta + j]}}, 0.0);
            if (with_scc) {
                double a_inv = 1.0 / link.area;
                for (const Line& c :
                     scc_over_cuts(lo * a_inv, hi * a_inv, link.u_min, objective.rho))
                    add_row({{rp.off_s + j, 1.0}, {rp.off_q + j, -c.slope * a_inv}}, c.intercept);
            }
        }
        for (int i = 0; i < n_n; ++i)
            if (lp.ub[rp.off_alpha + i] > 0.0)
                add_row({{rp.off_alpha + i, 1.0}, {rp.off_y + i, -lp.ub[rp.off_alpha + i]}}, 0.0);
        lp.a_ub.resize(static_cast<int>(b_ub.size()), rp.n_var);
        lp.a_ub.setFromTriplets(ub_trip.begin(), ub_trip.end());
        lp.b_ub = Eigen::Map<Vec>(b_ub.data(), static_cast<int>(b_ub.size()));

        rp.steps.push_back(std::move(lp));
    }
    return rp;
}

RelaxationSolution solve_relaxation(const RelaxedProblem& rp, const LpOptions& opt) {
    const NetworkModel& model = *rp.model;
    const int n_t = static_cast<int>(rp.steps.size());
    RelaxationSolution out;
    out.z = Vec::Zero(model.np());
    out.y = Vec::Zero(model.nn());
    out.settings = ControlSettings::zeros(n_t, model.np(), model.nn());
    for (int t = 0; t < n_t; ++t) {
        LpResult sol = solve_lp(rp.steps[t], opt);
        if (sol.status == LpStatus::Infeasible)
            throw InfeasibleError("relaxation infeasible at step " + std::to_string(t));
        out.objective += (sol.objective + rp.constant[t]) / n_t;
        double bound_t = std::isfinite(sol.lower_bound) ? sol.lower_bound : sol.objective;
        out.bound += (bound_t + rp.constant[t]) / n_t;
        out.z += sol.x.segment(rp.off_z, model.np()) / n_t;
        out.y += sol.x.segment(rp.off_y, model.nn()) / n_t;
        out.settings.eta.row(t) = sol.x.segment(rp.off_eta, model.np()).transpose();
        out.settings.alpha.row(t) = sol.x.segment(rp.off_alpha, model.nn()).transpose();
    }
    return out;
}

BoundsSet obbt(RelaxedProblem& rp, int max_rounds, const LpOptions& opt) {
    BoundsSet bounds = rp.scenario->bounds;
    if (max_rounds <= 0) return bounds;
    const NetworkModel& model = *rp.model;
    const int n_p = model.np();
    const int n_t = static_cast<int>(rp.steps.size());

    RelaxationSolution rsol = solve_relaxation(rp, opt);
    std::vector<int> order(n_p);
    for (int j = 0; j < n_p; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rsol.z[a] > rsol.z[b]; });
    const int n_sel = std::max(1, n_p / 10);
    order.resize(n_sel);

    for (int round = 0; round < max_rounds; ++round) {
        double max_change = 0.0;
        for (int t = 0; t < n_t; ++t) {
            LpProblem& lp = rp.steps[t];
            Vec c_save = lp.c;
            auto tighten = [&](int var, double& lo_ref, double& hi_ref) {
                double range = hi_ref - lo_ref;
                if (range < 1e-12) return;
                lp.c.setZero();
                lp.c[var] = 1.0;
                LpResult lo_sol = solve_lp(lp, opt);
                lp.c[var] = -1.0;
                LpResult hi_sol = solve_lp(lp, opt);
                double lo_new = lo_ref, hi_new = hi_ref;
                if (lo_sol.status != LpStatus::Infeasible && std::isfinite(lo_sol.lower_bound))
                    lo_new = std::min(std::max(lo_ref, lo_sol.lower_bound), hi_ref);
                if (hi_sol.status != LpStatus::Infeasible && std::isfinite(hi_sol.lower_bound))
                    hi_new = std::max(std::min(hi_ref, -hi_sol.lower_bound), lo_new);
                max_change = std::max(max_change, ((lo_new - lo_ref) + (hi_ref - hi_new)) / range);
                lo_ref = lo_new;
                hi_ref = hi_new;
                lp.lb[var] = lo_new;
                lp.ub[var] = hi_new;
            };
            for (int j : order) {
                tighten(rp.off_q + j, bounds.q_lo(t, j), bounds.q_hi(t, j));
                if (lp.ub[rp.off_eta + j] > lp.lb[rp.off_eta + j])
                    tighten(rp.off_eta + j, bounds.eta_lo(t, j), bounds.eta_hi(t, j));
            }
            lp.c = c_save;
        }
        if (max_change < 0.01) break;
    }
    return bounds;
}

std::vector<ValveConfig> randomized_rounding(const RelaxationSolution& rsol,
                                             const NetworkModel& model, int n_v, int n_f,
                                             int trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("randomized_rounding: trials must be >= 1");
    std::mt19937_64 rng(seed);
    auto uniform = [&]() { return (rng() >> 11) * 0x1.0p-53; };

    // weighted sampling without replacement; mass >= 1 - 1e-9 always included
    auto sample = [&](const Vec& mass, const std::vector<int>& candidates, int k) {
        std::vector<int> chosen;
        std::vector<int> pool;
        std::vector<double> weight;
        for (int idx : candidates) {
            if (mass[idx] >= 1.0 - 1e-9) chosen.push_back(idx);
            else {
                pool.push_back(idx);
                weight.push_back(std::max(mass[idx], 0.0) + 1e-12);
            }
        }
        while (static_cast<int>(chosen.size()) < k && !pool.empty()) {
            double total = 0.0;
            for (double w : weight) total += w;
            double r = uniform() * total;
            size_t pick = 0;
            for (; pick + 1 < pool.size(); ++pick) {
                r -= weight[pick];
                if (r <= 0.0) break;
            }
            chosen.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<long>(pick));
            weight.erase(weight.begin() + static_cast<long>(pick));
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    };

    std::vector<int> link_cands, node_cands;
    for (int j = 0; j < model.np(); ++j)
        if (model.links[j].is_pcv_candidate) link_cands.push_back(j);
    for (int i = 0; i < model.nn(); ++i)
        if (model.nodes[i].is_afv_candidate) node_cands.push_back(i);

    std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
    std::vector<ValveConfig> configs;
    for (int trial = 0; trial < trials; ++trial) {
        ValveConfig cfg;
        cfg.pcv_links = sample(rsol.z, link_cands, n_v);
        cfg.afv_nodes = sample(rsol.y, node_cands, n_f);
        if (seen.insert({cfg.pcv_links, cfg.afv_nodes}).second) configs.push_back(std::move(cfg));
    }
    std::sort(configs.begin(), configs.end(), [](const ValveConfig& a, const ValveConfig& b) {
        return std::tie(a.pcv_links, a.afv_nodes) < std::tie(b.pcv_links, b.afv_nodes);
    });
    return configs;
}

PlacementSolution solve_vp_minlp(const NetworkSolver& solver, const Scenario& scenario, int n_v,
                                 int n_f, const ObjectiveSpec& objective,
                                 const PlacementOptions& opt) {
    const NetworkModel& model = solver.model();
    PlacementSolution out;
    if (n_v == 0 && n_f == 0) {
        out.config.directions.clear();
        out.control = solve_vc_nlp(solver, scenario, out.config, objective, {}, opt.scp);
        out.relaxation_bound = out.control.scalar_objective;
        out.gap = 0.0;
        return out;
    }

    RelaxedProblem relaxed = build_relaxation(model, scenario, n_v, n_f, objective, opt);
    if (opt.obbt_rounds > 0) obbt(relaxed, opt.obbt_rounds, opt.lp);
    RelaxationSolution rsol = solve_relaxation(relaxed, opt.lp);
    std::vector<ValveConfig> configs =
        randomized_rounding(rsol, model, n_v, n_f, opt.trials, opt.seed);

    bool have_best = false;
    std::ostringstream failures;
    for (const ValveConfig& cfg : configs) {
        try {
            DirectionSweep sweep = enumerate_directions(solver, scenario, cfg, objective,
                                                        rsol.settings, opt.scp, opt.enum_cap);
            if (!have_best || sweep.best.scalar_objective < out.control.scalar_objective) {
                out.control = std::move(sweep.best);
                out.config = cfg;
                out.config.directions = sweep.best_directions;
                have_best = true;
            }
        } catch (const InfeasibleError& e) {
            failures << "\n  candidate {links:";
            for (int j : cfg.pcv_links) failures << ' ' << model.links[j].id;
            failures << ", nodes:";
            for (int i : cfg.afv_nodes) failures << ' ' << model.nodes[i].id;
            failures << "}: " << e.what();
        }
    }
    if (!have_best)
        throw InfeasibleError("no feasible placement among " + std::to_string(configs.size()) +
                              " rounded candidates:" + failures.str());
    out.relaxation_bound = rsol.bound;
    out.gap = (out.control.scalar_objective - rsol.bound) /
              std::max(std::abs(rsol.bound), 1e-9);
    return out;
}

} // namespace wdn
