// SPDX-License-Identifier: MIT
#include "wdn/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace wdn {

Vec azp_per_step(const NetworkModel& model, const HydraulicState& state) {
    const int n_t = state.n_t();
    Vec out = Vec::Zero(n_t);
    for (int t = 0; t < n_t; ++t) {
        double acc = 0.0;
        for (int i = 0; i < model.nn(); ++i)
            acc += model.nodes[i].azp_weight * (state.h(t, i) - model.nodes[i].elevation);
        out[t] = acc;
    }
    return out;
}

double azp(const NetworkModel& model, const HydraulicState& state) {
    return azp_per_step(model, state).mean();
}

double scc_sigmoid_term(double u, double u_min, double rho) {
    double psi_pos = 1.0 / (1.0 + std::exp(-rho * (u - u_min)));
    double psi_neg = 1.0 / (1.0 + std::exp(-rho * (-u - u_min)));
    return psi_pos + psi_neg;
}

Vec scc_per_step(const NetworkModel& model, const HydraulicState& state, bool smooth, double rho) {
    const int n_t = state.n_t();
    Vec out = Vec::Zero(n_t);
    for (int t = 0; t < n_t; ++t) {
        double acc = 0.0;
        for (int j = 0; j < model.np(); ++j) {
            const Link& link = model.links[j];
            double u = state.q(t, j) / link.area;
            if (smooth)
                acc += link.scc_weight * scc_sigmoid_term(u, link.u_min, rho);
            else
                acc += link.scc_weight * (std::abs(u) > link.u_min ? 1.0 : 0.0);
        }
        out[t] = acc;
    }
    return out;
}

double scc(const NetworkModel& model, const HydraulicState& state, bool smooth, double rho) {
    return scc_per_step(model, state, smooth, rho).mean();
}

double pressure_variation(const HydraulicState& state) {
    const int n_t = state.n_t();
    if (n_t <= 1) return 0.0;
    double acc = (state.h.row(0) - state.h.row(n_t - 1)).squaredNorm();
    for (int t = 1; t < n_t; ++t) acc += (state.h.row(t) - state.h.row(t - 1)).squaredNorm();
    return acc;
}

PressureRangeStats nodal_pressure_ranges(const NetworkModel& model, const HydraulicState& state) {
    const int n_n = model.nn();
    PressureRangeStats stats;
    stats.range.resize(n_n);
    for (int i = 0; i < n_n; ++i)
        stats.range[i] = state.h.col(i).maxCoeff() - state.h.col(i).minCoeff();
    std::vector<double> sorted(stats.range.data(), stats.range.data() + n_n);
    std::sort(sorted.begin(), sorted.end());
    stats.cdf.reserve(n_n);
    for (int k = 0; k < n_n; ++k)
        stats.cdf.emplace_back(sorted[k], static_cast<double>(k + 1) / n_n);
    return stats;
}

ObjectiveValue evaluate_objectives(const NetworkModel& model, const HydraulicState& state,
                                   const ObjectiveParams& params) {
    ObjectiveValue v;
    v.azp_per_step = azp_per_step(model, state);
    v.scc_indicator_per_step = scc_per_step(model, state, false, params.rho);
    v.scc_sigmoid_per_step = scc_per_step(model, state, true, params.rho);
    v.azp = v.azp_per_step.mean();
    v.scc_indicator = v.scc_indicator_per_step.mean();
    v.scc_sigmoid = v.scc_sigmoid_per_step.mean();
    v.pv = pressure_variation(state);
    return v;
}

} // namespace wdn
