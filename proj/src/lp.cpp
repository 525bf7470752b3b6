// SPDX-License-Identifier: MIT
#include "wdn/lp.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

namespace wdn {

namespace {

// Stacked inequality system C x <= d: user rows, then upper bounds, then
// negated lower bounds (finite entries only).
struct Stacked {
    SpMat C;
    Vec d;
    std::vector<int> ub_rows, lb_rows; // variable index per box row
};

Stacked stack_inequalities(const LpProblem& p) {
    const int n = p.n();
    const int m_ub = static_cast<int>(p.b_ub.size());
    Stacked s;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> d;
    for (int k = 0; k < p.a_ub.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.a_ub, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int r = 0; r < m_ub; ++r) d.push_back(p.b_ub[r]);
    int row = m_ub;
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.ub[i])) {
            trip.emplace_back(row, i, 1.0);
            d.push_back(p.ub[i]);
            s.ub_rows.push_back(i);
            ++row;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.lb[i])) {
            trip.emplace_back(row, i, -1.0);
            d.push_back(-p.lb[i]);
            s.lb_rows.push_back(i);
            ++row;
        }
    }
    s.C.resize(row, n);
    s.C.setFromTriplets(trip.begin(), trip.end());
    s.d = Eigen::Map<Vec>(d.data(), static_cast<long>(d.size()));
    return s;
}

} // namespace

LpResult solve_lp(const LpProblem& p, const LpOptions& opt) {
    const int n = p.n();
    const int m_eq = static_cast<int>(p.b_eq.size());
    Stacked s = stack_inequalities(p);
    const int m_i = static_cast<int>(s.d.size());
    if (m_i == 0) throw DomainError("solve_lp: problem has no inequality constraints");
    const SpMat Ct = SpMat(s.C.transpose());
    const SpMat At = m_eq > 0 ? SpMat(p.a_eq.transpose()) : SpMat(n, 0);

    // start point: box midpoints, unit slacks
    Vec x(n);
    for (int i = 0; i < n; ++i) {
        double lo = p.lb[i], hi = p.ub[i];
        if (std::isfinite(lo) && std::isfinite(hi)) x[i] = 0.5 * (lo + hi);
        else if (std::isfinite(lo)) x[i] = lo + 1.0;
        else if (std::isfinite(hi)) x[i] = hi - 1.0;
        else x[i] = 0.0;
    }
    Vec w = (s.d - s.C * x).cwiseMax(1.0);
    Vec z = Vec::Ones(m_i);
    Vec y = Vec::Zero(m_eq);

    const double bnorm = 1.0 + std::max(m_eq > 0 ? p.b_eq.lpNorm<Eigen::Infinity>() : 0.0,
                                        s.d.lpNorm<Eigen::Infinity>());
    const double cnorm = 1.0 + p.c.lpNorm<Eigen::Infinity>();

    LpResult res;
    const int dim = n + m_eq;
    Eigen::SparseLU<SpMat> lu;
    SpMat kkt(dim, dim);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        Vec r_d = p.c + Ct * z;
        if (m_eq > 0) r_d += At * y;
        Vec r_p = m_eq > 0 ? Vec(p.a_eq * x - p.b_eq) : Vec();
        Vec r_i = s.C * x + w - s.d;
        double mu = w.dot(z) / m_i;

        double pinf = r_i.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
        // r_i includes slack w, so measure true violation instead
        Vec viol = s.C * x - s.d;
        pinf = viol.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
        if (m_eq > 0) pinf = std::max(pinf, r_p.lpNorm<Eigen::Infinity>());
        double dinf = r_d.lpNorm<Eigen::Infinity>();
        res.iterations = iter;
        if (pinf / bnorm <= opt.tol_feas && dinf / cnorm <= opt.tol_feas &&
            mu <= opt.tol_gap * (1.0 + std::abs(p.c.dot(x)))) {
            res.status = LpStatus::Optimal;
            break;
        }

        // KKT: [C' W^-1 Z C, A'; A, 0] with small regularization
        Vec dscale = z.cwiseQuotient(w);
        std::vector<Eigen::Triplet<double>> trip;
        SpMat H = Ct * dscale.asDiagonal() * s.C;
        for (int k = 0; k < H.outerSize(); ++k)
            for (SpMat::InnerIterator it(H, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1e-10);
        if (m_eq > 0)
            for (int k = 0; k < p.a_eq.outerSize(); ++k)
                for (SpMat::InnerIterator it(p.a_eq, k); it; ++it) {
                    trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                      it.value());
                    trip.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                                      it.value());
                }
        for (int r = 0; r < m_eq; ++r) trip.emplace_back(n + r, n + r, -1e-10);
        kkt.setFromTriplets(trip.begin(), trip.end());
        lu.compute(kkt);
        if (lu.info() != Eigen::Success) {
            res.status = LpStatus::MaxIterations;
            break;
        }

        auto solve_kkt = [&](const Vec& r_c) -> std::pair<Vec, Vec> {
            // returns (dx, dy); r_c is the complementarity rhs target (WZe - target)
            Vec tmp = -r_c.cwiseQuotient(w) + dscale.cwiseProduct(r_i); // W^-1(-r_c + Z r_i)
            Vec rhs(dim);
            rhs.head(n) = -r_d - Ct * tmp;
            if (m_eq > 0) rhs.tail(m_eq) = -r_p;
            Vec sol = lu.solve(rhs);
            return {sol.head(n), m_eq > 0 ? Vec(sol.tail(m_eq)) : Vec()};
        };
        auto recover = [&](const Vec& dx, const Vec& r_c) -> std::pair<Vec, Vec> {
            Vec dw = -r_i - s.C * dx;
            Vec dz = (-r_c - z.cwiseProduct(dw)).cwiseQuotient(w);
            return {dw, dz};
        };
        auto max_step = [](const Vec& v, const Vec& dv) {
            double a = 1.0;
            for (int i = 0; i < v.size(); ++i)
                if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
            return a;
        };

        // affine predictor
        Vec r_c_aff = w.cwiseProduct(z);
        auto [dx_aff, dy_aff] = solve_kkt(r_c_aff);
        auto [dw_aff, dz_aff] = recover(dx_aff, r_c_aff);
        double a_p = max_step(w, dw_aff), a_d = max_step(z, dz_aff);
        double mu_aff = (w + a_p * dw_aff).dot(z + a_d * dz_aff) / m_i;
        double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-8, 1.0);

        // corrector
        Vec r_c = w.cwiseProduct(z) + dw_aff.cwiseProduct(dz_aff) -
                  Vec::Constant(m_i, sigma * mu);
        auto [dx, dy] = solve_kkt(r_c);
        auto [dw, dz] = recover(dx, r_c);

        // on infeasible problems the multipliers diverge and the steps
        // eventually overflow; keep the last finite iterate so the stall
        // classification below sees a meaningful residual
        if (!dx.allFinite() || !dw.allFinite() || !dz.allFinite() ||
            (m_eq > 0 && !dy.allFinite()))
            break;

        double alpha_p = 0.99995 * max_step(w, dw);
        double alpha_d = 0.99995 * max_step(z, dz);
        x += alpha_p * dx;
        w += alpha_p * dw;
        z += alpha_d * dz;
        if (m_eq > 0) y += alpha_d * dy;
        res.iterations = iter + 1;
    }

    res.x = x;
    res.objective = p.c.dot(x);
    res.y_eq = y;
    res.z_ineq = z;
    Vec viol = s.C * x - s.d;
    res.primal_infeasibility = viol.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    if (m_eq > 0)
        res.primal_infeasibility =
            std::max(res.primal_infeasibility, (p.a_eq * x - p.b_eq).lpNorm<Eigen::Infinity>());
    Vec r_d = p.c + Ct * z;
    if (m_eq > 0) r_d += At * y;
    res.dual_infeasibility = r_d.lpNorm<Eigen::Infinity>();
    res.gap = w.dot(z) / m_i;

    if (res.status != LpStatus::Optimal) {
        // crude infeasibility signal: feasibility stalled far from tolerance
        if (res.primal_infeasibility / bnorm > 1e-4) res.status = LpStatus::Infeasible;
    }

    // certified bound: min c'x >= -y'b - z'd + sum_i min(r_di lb_i, r_di ub_i)
    bool boxed = true;
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(p.lb[i]) || !std::isfinite(p.ub[i])) boxed = false;
    if (boxed) {
        double bound = -z.dot(s.d);
        if (m_eq > 0) bound -= y.dot(p.b_eq);
        for (int i = 0; i < n; ++i) bound += std::min(r_d[i] * p.lb[i], r_d[i] * p.ub[i]);
        res.lower_bound = bound;
    } else {
        res.lower_bound = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

} // namespace wdn
