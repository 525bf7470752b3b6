// SPDX-License-Identifier: MIT
#include "wdn/network.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace wdn {

namespace {
constexpr double kGravity = 9.81;
constexpr double kPi = 3.14159265358979323846;
} // namespace

int NetworkModel::node_index(const std::string& id) const {
    for (int i = 0; i < nn(); ++i)
        if (nodes[i].id == id) return i;
    return -1;
}
int NetworkModel::source_index(const std::string& id) const {
    for (int i = 0; i < n0(); ++i)
        if (sources[i].id == id) return i;
    return -1;
}
int NetworkModel::link_index(const std::string& id) const {
    for (int j = 0; j < np(); ++j)
        if (links[j].id == id) return j;
    return -1;
}

double hw_resistance(double length, double hw_coeff, double diameter) {
    if (length <= 0.0) throw DomainError("hw_resistance: nonpositive length");
    if (hw_coeff <= 0.0) throw DomainError("hw_resistance: nonpositive HW coefficient");
    if (diameter <= 0.0) throw DomainError("hw_resistance: nonpositive diameter");
    return 10.67 * length / (std::pow(hw_coeff, 1.852) * std::pow(diameter, 4.871));
}

double valve_resistance(double loss_coeff, double diameter) {
    if (loss_coeff < 0.0) throw DomainError("valve_resistance: negative loss coefficient");
    if (diameter <= 0.0) throw DomainError("valve_resistance: nonpositive diameter");
    return 8.0 * loss_coeff / (kGravity * kPi * kPi * std::pow(diameter, 4.0));
}

double phi_native(const Link& link, double q) {
    return link.resistance * std::pow(std::abs(q), link.loss_exponent - 1.0) * q;
}

double dphi_native(const Link& link, double q) {
    return link.resistance * link.loss_exponent * std::pow(std::abs(q), link.loss_exponent - 1.0);
}

double phi(const Link& link, double q, HeadLossModel mode) {
    return mode == HeadLossModel::HW ? phi_native(link, q) : phi_qa(link, q);
}
double dphi(const Link& link, double q, HeadLossModel mode) {
    return mode == HeadLossModel::HW ? dphi_native(link, q) : dphi_qa(link, q);
}

void NetworkModel::finalize() {
    const int n_p = np(), n_n = nn(), n_0 = n0();
    if (n_p < 1) throw ValidationError("network has no links");
    if (n_n < 1) throw ValidationError("network has no junctions");
    if (n_0 < 1) throw ValidationError("network has no sources");

    total_length = 0.0;
    for (auto& link : links) {
        if (link.diameter <= 0.0)
            throw ValidationError("link '" + link.id + "': nonpositive diameter");
        if (link.kind == LinkKind::Pipe) {
            if (link.length <= 0.0)
                throw ValidationError("link '" + link.id + "': nonpositive length");
            link.loss_exponent = 1.852;
            link.resistance = hw_resistance(link.length, link.hw_coeff, link.diameter);
        } else {
            link.loss_exponent = 2.0;
            link.resistance = valve_resistance(link.loss_coeff, link.diameter);
            if (link.resistance <= 0.0)
                throw ValidationError("link '" + link.id + "': valve requires positive loss coefficient");
        }
        link.area = kPi * link.diameter * link.diameter / 4.0;
        total_length += link.length;
    }
    if (total_length <= 0.0) throw ValidationError("network has zero total pipe length");
    for (auto& link : links) link.scc_weight = link.length / total_length;

    std::vector<Eigen::Triplet<double>> t12, t10;
    for (int j = 0; j < n_p; ++j) {
        const Link& link = links[j];
        auto place = [&](const EndRef& e, double sgn) {
            if (e.is_source) {
                if (e.idx < 0 || e.idx >= n_0)
                    throw ValidationError("link '" + link.id + "': bad source reference");
                t10.emplace_back(j, e.idx, sgn);
            } else {
                if (e.idx < 0 || e.idx >= n_n)
                    throw ValidationError("link '" + link.id + "': bad node reference");
                t12.emplace_back(j, e.idx, sgn);
            }
        };
        place(link.from, -1.0);
        place(link.to, +1.0);
    }
    a12.resize(n_p, n_n);
    a10.resize(n_p, n_0);
    a12.setFromTriplets(t12.begin(), t12.end());
    a10.setFromTriplets(t10.begin(), t10.end());

    // connectivity over the combined node set
    std::vector<std::vector<int>> adj(n_n + n_0);
    auto flat = [&](const EndRef& e) { return e.is_source ? n_n + e.idx : e.idx; };
    for (const auto& link : links) {
        adj[flat(link.from)].push_back(flat(link.to));
        adj[flat(link.to)].push_back(flat(link.from));
    }
    std::vector<char> seen(n_n + n_0, 0);
    std::vector<int> stack{n_n}; // start from first source
    seen[n_n] = 1;
    int count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                ++count;
                stack.push_back(w);
            }
    }
    if (count != n_n + n_0) {
        for (int i = 0; i < n_n; ++i)
            if (!seen[i])
                throw ValidationError("network is disconnected: node '" + nodes[i].id +
                                      "' unreachable from sources");
        for (int i = 0; i < n_0; ++i)
            if (!seen[n_n + i])
                throw ValidationError("network is disconnected: source '" + sources[i].id +
                                      "' unreachable");
    }

    // AZP weights: half-lengths of incident links, normalized over junctions
    for (auto& node : nodes) node.azp_weight = 0.0;
    for (const auto& link : links) {
        if (!link.from.is_source) nodes[link.from.idx].azp_weight += link.length / 2.0;
        if (!link.to.is_source) nodes[link.to.idx].azp_weight += link.length / 2.0;
    }
    double wsum = 0.0;
    for (const auto& node : nodes) wsum += node.azp_weight;
    if (wsum <= 0.0) throw ValidationError("AZP weights degenerate: no pipe length at junctions");
    for (auto& node : nodes) node.azp_weight /= wsum;
}

QaFit fit_quadratic(const Link& link, double q_lo, double q_hi) {
    if (!(q_lo < q_hi)) throw DomainError("fit_quadratic: degenerate domain for link '" + link.id + "'");
    if (link.resistance <= 0.0) throw DomainError("fit_quadratic: link '" + link.id + "' has no resistance");

    QaFit fit;
    if (link.loss_exponent == 2.0) {
        // already quadratic: exact representation
        fit.a = link.resistance;
        fit.b = 0.0;
    } else {
        // least squares of a*q|q| + b*q against the native curve on a 200-pt grid
        const int m = 200;
        double s_aa = 0, s_ab = 0, s_bb = 0, s_ay = 0, s_by = 0;
        for (int k = 0; k < m; ++k) {
            double q = q_lo + (q_hi - q_lo) * k / (m - 1.0);
            double ba = q * std::abs(q), bb = q;
            double y = phi_native(link, q);
            s_aa += ba * ba;
            s_ab += ba * bb;
            s_bb += bb * bb;
            s_ay += ba * y;
            s_by += bb * y;
        }
        double det = s_aa * s_bb - s_ab * s_ab;
        double a, b;
        if (std::abs(det) > 1e-300) {
            a = (s_ay * s_bb - s_by * s_ab) / det;
            b = (s_aa * s_by - s_ab * s_ay) / det;
        } else {
            a = 0.0;
            b = s_bb > 0 ? s_by / s_bb : 0.0;
        }
        // nonnegativity by projection, refitting the free coefficient
        if (a < 0.0) {
            a = 0.0;
            b = s_bb > 0 ? s_by / s_bb : 0.0;
        }
        if (b < 0.0) {
            b = 0.0;
            a = s_aa > 0 ? s_ay / s_aa : 0.0;
            if (a < 0.0) a = 0.0;
        }
        fit.a = a;
        fit.b = b;
    }

    // Error relative to the largest head loss over the operating range.
    // A pointwise-relative measure is meaningless here: near q = 0 any
    // quadratic deviates from the power-law curve by an unbounded ratio.
    const int grid = 1000;
    const double eps = 1e-6;
    double scale = std::max({std::abs(phi_native(link, q_lo)), std::abs(phi_native(link, q_hi)),
                             eps});
    double max_err = 0.0;
    for (int k = 0; k < grid; ++k) {
        double q = q_lo + (q_hi - q_lo) * k / (grid - 1.0);
        double truth = phi_native(link, q);
        double approx = q * (fit.a * std::abs(q) + fit.b);
        max_err = std::max(max_err, std::abs(approx - truth));
    }
    fit.max_rel_err = max_err / scale;
    return fit;
}

void fit_all_quadratics(NetworkModel& model, const BoundsSet& bounds) {
    for (int j = 0; j < model.np(); ++j) {
        double lo = bounds.q_lo.col(j).minCoeff();
        double hi = bounds.q_hi.col(j).maxCoeff();
        QaFit fit = fit_quadratic(model.links[j], lo, hi);
        model.links[j].qa_a = fit.a;
        model.links[j].qa_b = fit.b;
        model.links[j].qa_max_rel_err = fit.max_rel_err;
    }
}

BoundsSet derive_bounds(const NetworkModel& model, const Mat& demands,
                        const Mat& source_heads, const BoundsOptions& opt) {
    if (opt.u_max <= 0.0) throw DomainError("derive_bounds: u_max must be positive");
    const int n_t = static_cast<int>(demands.rows());
    const int n_p = model.np(), n_n = model.nn();

    BoundsSet b;
    b.u_max = Vec::Constant(n_p, opt.u_max);
    b.q_lo.resize(n_t, n_p);
    b.q_hi.resize(n_t, n_p);
    for (int j = 0; j < n_p; ++j) {
        double cap = opt.u_max * model.links[j].area;
        b.q_lo.col(j).setConstant(-cap);
        b.q_hi.col(j).setConstant(cap);
    }

    const double h_src_max = source_heads.maxCoeff();
    b.h_lo.resize(n_t, n_n);
    b.h_hi.resize(n_t, n_n);
    for (int i = 0; i < n_n; ++i) {
        bool has_demand = demands.col(i).maxCoeff() > 0.0;
        double floor = model.nodes[i].elevation + (has_demand ? opt.regulatory_head : 0.0);
        b.h_lo.col(i).setConstant(floor);
        b.h_hi.col(i).setConstant(h_src_max);
    }

    // eta bounds from head bounds at link endpoints; theta = phi at flow bounds
    b.eta_lo.resize(n_t, n_p);
    b.eta_hi.resize(n_t, n_p);
    b.theta_lo.resize(n_t, n_p);
    b.theta_hi.resize(n_t, n_p);
    for (int t = 0; t < n_t; ++t) {
        for (int j = 0; j < n_p; ++j) {
            const Link& link = model.links[j];
            auto hmin = [&](const EndRef& e) {
                return e.is_source ? source_heads(t, e.idx) : b.h_lo(t, e.idx);
            };
            auto hmax = [&](const EndRef& e) {
                return e.is_source ? source_heads(t, e.idx) : b.h_hi(t, e.idx);
            };
            b.eta_hi(t, j) = std::max(0.0, hmax(link.from) - hmin(link.to));
            b.eta_lo(t, j) = std::min(0.0, -(hmax(link.to) - hmin(link.from)));
            b.theta_lo(t, j) = phi(link, b.q_lo(t, j), opt.theta_model);
            b.theta_hi(t, j) = phi(link, b.q_hi(t, j), opt.theta_model);
        }
    }

    b.alpha_hi.resize(n_t, n_n);
    for (int i = 0; i < n_n; ++i)
        b.alpha_hi.col(i).setConstant(model.nodes[i].is_afv_candidate ? opt.alpha_max : 0.0);
    return b;
}

} // namespace wdn
