// SPDX-License-Identifier: MIT
#include <limits>
#include "wdn/hydraulics.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <deque>

namespace wdn {

NetworkSolver::NetworkSolver(const NetworkModel& model) : model_(&model) {
    const int n_n = model.nn(), n_0 = model.n0(), n_p = model.np();
    const int n_flat = n_n + n_0;
    auto flat = [&](const EndRef& e) { return e.is_source ? n_n + e.idx : e.idx; };

    std::vector<std::vector<std::pair<int, int>>> adj(n_flat); // (neighbor, link)
    for (int j = 0; j < n_p; ++j) {
        const Link& link = model.links[j];
        adj[flat(link.from)].emplace_back(flat(link.to), j);
        adj[flat(link.to)].emplace_back(flat(link.from), j);
    }

    parent_edge_.assign(n_n, -1);
    parent_flat_.assign(n_n, -1);
    std::vector<char> seen(n_flat, 0);
    std::vector<char> edge_in_tree(n_p, 0);
    std::deque<int> queue;
    for (int k = 0; k < n_0; ++k) {
        seen[n_n + k] = 1;
        queue.push_back(n_n + k);
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (auto [w, j] : adj[v]) {
            if (seen[w]) continue;
            seen[w] = 1;
            // w must be a junction: sources were all seeded
            parent_edge_[w] = j;
            parent_flat_[w] = v;
            edge_in_tree[j] = 1;
            bfs_order_.push_back(w);
            queue.push_back(w);
        }
    }

    for (int j = 0; j < n_p; ++j)
        if (!edge_in_tree[j]) chords_.push_back(j);

    // pathvec(x): unit flow transported from junction x to its root, as
    // signed tree-edge coefficients
    auto pathvec = [&](int x_flat, std::vector<std::pair<int, double>>& out, double scale) {
        while (x_flat < n_n) {
            int e = parent_edge_[x_flat];
            const Link& link = model.links[e];
            // travel x -> parent; +1 if the link is directed the same way
            double sgn = (flat(link.from) == x_flat) ? 1.0 : -1.0;
            out.emplace_back(e, sgn * scale);
            x_flat = parent_flat_[x_flat];
        }
    };

    std::vector<Eigen::Triplet<double>> trip;
    for (size_t c = 0; c < chords_.size(); ++c) {
        int j = chords_[c];
        const Link& link = model.links[j];
        std::vector<std::pair<int, double>> col;
        col.emplace_back(j, 1.0);
        pathvec(flat(link.to), col, 1.0);    // return flow v -> root
        pathvec(flat(link.from), col, -1.0); // supply flow root -> u
        // merge duplicates (shared ancestor path cancels)
        for (auto& [e, v] : col) trip.emplace_back(e, static_cast<int>(c), v);
    }
    nullbasis_.resize(n_p, static_cast<int>(chords_.size()));
    nullbasis_.setFromTriplets(trip.begin(), trip.end()); // duplicate entries sum
    nullbasis_.prune(1e-300);
}

Vec NetworkSolver::tree_flow(const Vec& net_demand) const {
    const int n_n = model_->nn();
    Vec q = Vec::Zero(model_->np());
    Vec carry = net_demand;
    auto flat = [&](const EndRef& e) { return e.is_source ? n_n + e.idx : e.idx; };
    for (auto it = bfs_order_.rbegin(); it != bfs_order_.rend(); ++it) {
        int x = *it;
        int e = parent_edge_[x];
        const Link& link = model_->links[e];
        // flow entering x through e carries the subtree's net demand
        q[e] += (flat(link.to) == x) ? carry[x] : -carry[x];
        if (parent_flat_[x] < n_n) carry[parent_flat_[x]] += carry[x];
    }
    return q;
}

Vec NetworkSolver::recover_heads(const Vec& source_head, const Vec& theta, const Vec& eta) const {
    const int n_n = model_->nn();
    Vec h(n_n);
    auto head_at = [&](int flat_id) {
        return flat_id < n_n ? h[flat_id] : source_head[flat_id - n_n];
    };
    auto flat = [&](const EndRef& e) { return e.is_source ? n_n + e.idx : e.idx; };
    for (int x : bfs_order_) {
        int e = parent_edge_[x];
        const Link& link = model_->links[e];
        double drop = theta[e] + eta[e];
        // energy row: h_to - h_from + theta + eta = 0
        if (flat(link.to) == x)
            h[x] = head_at(parent_flat_[x]) - drop;
        else
            h[x] = head_at(parent_flat_[x]) + drop;
    }
    return h;
}

namespace {

// Lower bound on the linearized loss slope. Flooring at the slope seen at a
// small reference velocity (rather than a fixed tiny flow) keeps the reduced
// Jacobian well conditioned on oversized pipes whose loss curve is nearly
// flat across the whole operating range.
double dphi_floor(const Link& link, const SolverOptions& opt) {
    double q_ref = std::max(opt.reg_eps, 0.01 * link.area);
    return link.resistance * link.loss_exponent *
           std::pow(q_ref, link.loss_exponent - 1.0);
}

}  // namespace

StepSolution NetworkSolver::solve_step(const Vec& demand, const Vec& source_head, const Vec& eta,
                                       const Vec& alpha, HeadLossModel mode,
                                       const SolverOptions& opt) const {
    const NetworkModel& model = *model_;
    const int n_p = model.np();
    const int n_c = n_chords();

    const Vec q_part = tree_flow(demand + alpha);
    Vec lambda = Vec::Zero(n_c);
    // constant part of the loop equations: eta and source-head differences
    const Vec const_term = eta + model.a10 * source_head;

    Vec q = q_part;
    Vec phi_q(n_p), dphi_q(n_p);
    auto evaluate = [&](const Vec& lam, Vec& q_out, Vec& phi_out) {
        q_out = q_part + nullbasis_ * lam;
        for (int j = 0; j < n_p; ++j) phi_out[j] = phi(model.links[j], q_out[j], mode);
    };

    // The loop system is the gradient of the strictly convex content
    // E(lambda) = sum_j Phi_j(q_j) + const'q with Phi_j the head-loss
    // antiderivative, so an Armijo search on E converges globally even
    // where phi' is nearly flat and a residual-norm search would stall.
    // Returns E and the sum of term magnitudes; the latter bounds the
    // floating-point noise in E so the line search can recognize when a
    // predicted decrease is smaller than what is measurable.
    auto content = [&](const Vec& qv) {
        double e = 0.0, mag = 0.0;
        for (int j = 0; j < n_p; ++j) {
            const Link& link = model.links[j];
            double aq = std::abs(qv[j]);
            double term;
            if (mode == HeadLossModel::QA && link.kind == LinkKind::Pipe)
                term = link.qa_a * aq * aq * aq / 3.0 + link.qa_b * qv[j] * qv[j] / 2.0;
            else
                term = link.resistance * std::pow(aq, link.loss_exponent + 1.0) /
                       (link.loss_exponent + 1.0);
            double lin = const_term[j] * qv[j];
            e += term + lin;
            mag += std::abs(term) + std::abs(lin);
        }
        return std::pair<double, double>(e, mag);
    };

    StepSolution sol;
    evaluate(lambda, q, phi_q);
    Vec g = nullbasis_.transpose() * (phi_q + const_term);
    int iter = 0;
    bool converged = g.size() == 0 || g.lpNorm<Eigen::Infinity>() <= opt.tol;
    while (!converged && iter < opt.max_iterations) {
        ++iter;
        for (int j = 0; j < n_p; ++j) {
            const Link& link = model.links[j];
            dphi_q[j] = std::max(dphi(link, q[j], mode), dphi_floor(link, opt));
        }
        Mat jac = nullbasis_.transpose() * dphi_q.asDiagonal() * nullbasis_;
        Vec step = Eigen::LDLT<Mat>(jac).solve(-g);
        double ddir = g.dot(step);  // negative: step is a descent direction for E

        auto [e0, mag0] = content(q);
        double scale = 1.0;
        Vec lam_try, q_try(n_p), phi_try(n_p);
        bool accepted = false;
        for (int halving = 0; halving <= opt.max_halvings; ++halving) {
            lam_try = lambda + scale * step;
            evaluate(lam_try, q_try, phi_try);
            auto [e_try, mag_try] = content(q_try);
            // Armijo with a rounding allowance: near the solution the true
            // decrease drops below the noise in E, and a strict test would
            // reject the full Newton step forever.
            double noise = 8.0 * std::numeric_limits<double>::epsilon() * (mag0 + mag_try);
            if (e_try <= e0 + 1e-4 * scale * ddir + noise) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // stalled at numerical precision
        lambda = lam_try;
        q = q_try;
        phi_q = phi_try;
        g = nullbasis_.transpose() * (phi_q + const_term);
        converged = g.lpNorm<Eigen::Infinity>() <= opt.tol;
    }

    sol.q = q;
    sol.theta = phi_q;
    sol.h = recover_heads(source_head, phi_q, eta);
    sol.iterations = iter;
    sol.residual_energy = g.size() == 0 ? 0.0 : g.lpNorm<Eigen::Infinity>();
    sol.residual_mass =
        (model.a12.transpose() * q - demand - alpha).lpNorm<Eigen::Infinity>();
    sol.converged = sol.residual_energy <= opt.accept_energy && sol.residual_mass <= opt.accept_mass;
    sol.dphi_reg.resize(n_p);
    for (int j = 0; j < n_p; ++j) {
        const Link& link = model.links[j];
        sol.dphi_reg[j] = std::max(dphi(link, q[j], mode), dphi_floor(link, opt));
    }
    if (!sol.converged)
        throw ConvergenceError("hydraulic step did not converge (energy " +
                                   std::to_string(sol.residual_energy) + " m, mass " +
                                   std::to_string(sol.residual_mass) + " m3/s)",
                               sol.residual_energy, sol.residual_mass);
    return sol;
}

namespace {

HydraulicState run_eps(const NetworkSolver& solver, const Scenario& scenario,
                       const ControlSettings& settings, HeadLossModel mode,
                       const SolverOptions& opt, bool parallel) {
    const NetworkModel& model = solver.model();
    const int n_t = scenario.n_t;
    HydraulicState state;
    state.q.resize(n_t, model.np());
    state.h.resize(n_t, model.nn());
    state.theta.resize(n_t, model.np());
    state.residual_energy.resize(n_t);
    state.residual_mass.resize(n_t);

    std::vector<std::string> failure(n_t);
    std::vector<char> failed(n_t, 0);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int t = 0; t < n_t; ++t) {
        try {
            StepSolution sol = solver.solve_step(scenario.demands.row(t), scenario.source_heads.row(t),
                                                 settings.eta.row(t), settings.alpha.row(t), mode, opt);
            state.q.row(t) = sol.q;
            state.h.row(t) = sol.h;
            state.theta.row(t) = sol.theta;
            state.residual_energy[t] = sol.residual_energy;
            state.residual_mass[t] = sol.residual_mass;
        } catch (const std::exception& e) {
            failed[t] = 1;
            failure[t] = e.what();
        }
    }
    for (int t = 0; t < n_t; ++t)
        if (failed[t])
            throw ConvergenceError("EPS failed at step " + std::to_string(t) + ": " + failure[t], 0, 0);
    return state;
}

} // namespace

HydraulicState NetworkSolver::solve_eps(const Scenario& scenario, const ControlSettings& settings,
                                        HeadLossModel mode, const SolverOptions& opt) const {
    return run_eps(*this, scenario, settings, mode, opt, true);
}

HydraulicState NetworkSolver::solve_eps_serial(const Scenario& scenario,
                                               const ControlSettings& settings, HeadLossModel mode,
                                               const SolverOptions& opt) const {
    return run_eps(*this, scenario, settings, mode, opt, false);
}

StepSensitivity NetworkSolver::sensitivities(const StepSolution& sol,
                                             const std::vector<int>& pcv_links,
                                             const std::vector<int>& afv_nodes) const {
    const NetworkModel& model = *model_;
    const int n_p = model.np(), n_n = model.nn();
    const int m = static_cast<int>(pcv_links.size() + afv_nodes.size());
    const int n_c = n_chords();

    Mat jac = nullbasis_.transpose() * sol.dphi_reg.asDiagonal() * nullbasis_;
    Eigen::LDLT<Mat> factor(jac);

    StepSensitivity sens;
    sens.dq = Mat::Zero(n_p, m);
    sens.dh = Mat::Zero(n_n, m);

    auto flat = [&](const EndRef& e) { return e.is_source ? n_n + e.idx : e.idx; };
    // head recovery is linear in (d_theta + d_eta) along the tree
    auto propagate_heads = [&](const Vec& d_drop, Vec& dh) {
        for (int x : bfs_order_) {
            int e = parent_edge_[x];
            const Link& link = model.links[e];
            double parent = parent_flat_[x] < n_n ? dh[parent_flat_[x]] : 0.0;
            dh[x] = (flat(link.to) == x) ? parent - d_drop[e] : parent + d_drop[e];
        }
    };

    int col = 0;
    for (int j : pcv_links) {
        // dg/deta_j = N^T e_j
        Vec rhs = nullbasis_.transpose() * Vec::Unit(n_p, j);
        Vec dlam = n_c > 0 ? Vec(factor.solve(-rhs)) : Vec();
        Vec dq = n_c > 0 ? Vec(nullbasis_ * dlam) : Vec(Vec::Zero(n_p));
        Vec d_drop = sol.dphi_reg.cwiseProduct(dq) + Vec::Unit(n_p, j);
        Vec dh(n_n);
        propagate_heads(d_drop, dh);
        sens.dq.col(col) = dq;
        sens.dh.col(col) = dh;
        ++col;
    }
    for (int i : afv_nodes) {
        Vec dq_part = tree_flow(Vec::Unit(n_n, i));
        Vec dq = dq_part;
        if (n_c > 0) {
            Vec rhs = nullbasis_.transpose() * sol.dphi_reg.cwiseProduct(dq_part);
            Vec dlam = factor.solve(-rhs);
            dq += nullbasis_ * dlam;
        }
        Vec d_drop = sol.dphi_reg.cwiseProduct(dq);
        Vec dh(n_n);
        propagate_heads(d_drop, dh);
        sens.dq.col(col) = dq;
        sens.dh.col(col) = dh;
        ++col;
    }
    return sens;
}

ResidualReport residual_report(const NetworkModel& model, const HydraulicState& state,
                               const Scenario& scenario, const ControlSettings& settings,
                               HeadLossModel mode) {
    const int n_t = scenario.n_t;
    if (state.q.rows() != n_t || state.q.cols() != model.np() || state.h.cols() != model.nn())
        throw DomainError("residual_report: dimension mismatch");
    ResidualReport report;
    report.energy.resize(n_t);
    report.mass.resize(n_t);
    for (int t = 0; t < n_t; ++t) {
        Vec q = state.q.row(t), h = state.h.row(t);
        Vec theta(model.np());
        for (int j = 0; j < model.np(); ++j) theta[j] = phi(model.links[j], q[j], mode);
        Vec energy = model.a12 * h + model.a10 * Vec(scenario.source_heads.row(t)) + theta +
                     Vec(settings.eta.row(t));
        Vec mass = model.a12.transpose() * q - Vec(scenario.demands.row(t)) -
                   Vec(settings.alpha.row(t));
        report.energy[t] = energy.lpNorm<Eigen::Infinity>();
        report.mass[t] = mass.lpNorm<Eigen::Infinity>();
    }
    return report;
}

} // namespace wdn
