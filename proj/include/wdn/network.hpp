// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "wdn/errors.hpp"

namespace wdn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

enum class HeadLossModel { HW, QA };

/// Reference to a link endpoint: index into either the junction or the
/// source list of the owning NetworkModel.
struct EndRef {
    int idx = -1;
    bool is_source = false;
};

struct Node {
    std::string id;
    double elevation = 0.0;          // m
    double base_demand = 0.0;        // m3/s
    int pattern = -1;                // index into Scenario patterns; -1 = constant
    double azp_weight = 0.0;         // normalized, sums to 1 over junctions
    bool is_afv_candidate = true;
};

struct Source {
    std::string id;
    double head = 0.0;               // m
    int pattern = -1;
};

enum class LinkKind { Pipe, Valve };

struct Link {
    std::string id;
    EndRef from, to;
    LinkKind kind = LinkKind::Pipe;
    double length = 0.0;             // m (0 for valves)
    double diameter = 0.0;           // m
    double hw_coeff = 0.0;           // Hazen-Williams C (pipes)
    double loss_coeff = 0.0;         // K (valves)
    double loss_exponent = 1.852;
    double resistance = 0.0;         // r_j
    double qa_a = 0.0, qa_b = 0.0;   // quadratic approximation coefficients
    double qa_max_rel_err = 0.0;     // recorded by fit_quadratic
    double area = 0.0;               // m2
    double scc_weight = 0.0;         // L_j / total_length
    double u_min = 0.2;              // self-cleaning velocity threshold, m/s
    bool is_pcv_candidate = true;
};

/// Immutable directed network graph with incidence structure.
/// Incidence convention: row j of (a12|a10) has -1 at the from-node and +1
/// at the to-node of link j, so rows sum to zero across the two matrices.
class NetworkModel {
  public:
    std::vector<Node> nodes;     // junctions (demand nodes)
    std::vector<Source> sources;
    std::vector<Link> links;
    SpMat a12;                   // n_p x n_n
    SpMat a10;                   // n_p x n_0
    double total_length = 0.0;   // m

    int np() const { return static_cast<int>(links.size()); }
    int nn() const { return static_cast<int>(nodes.size()); }
    int n0() const { return static_cast<int>(sources.size()); }

    int node_index(const std::string& id) const;    // -1 if absent
    int source_index(const std::string& id) const;
    int link_index(const std::string& id) const;

    /// Builds incidence matrices, resistances, areas, and weights;
    /// validates connectivity and invariants. Call once after filling the
    /// element lists.
    void finalize();
};

struct BoundsSet {
    Mat q_lo, q_hi;          // n_t x n_p, m3/s
    Mat h_lo, h_hi;          // n_t x n_n, m
    Mat eta_lo, eta_hi;      // n_t x n_p, m
    Mat theta_lo, theta_hi;  // n_t x n_p, m
    Mat alpha_hi;            // n_t x n_n, m3/s
    Vec u_max;               // n_p, m/s
};

struct Scenario {
    int n_t = 1;
    double step_minutes = 60.0;
    Mat demands;        // n_t x n_n, m3/s
    Mat source_heads;   // n_t x n_0, m
    BoundsSet bounds;
};

/// Hazen-Williams resistance, r = 10.67 L / (C^1.852 D^4.871).
double hw_resistance(double length, double hw_coeff, double diameter);

/// Minor-loss (valve) resistance, r = 8 K / (g pi^2 D^4).
double valve_resistance(double loss_coeff, double diameter);

/// Native head loss phi(q) = r |q|^(n-1) q for one link.
double phi_native(const Link& link, double q);
/// d/dq of phi_native.
double dphi_native(const Link& link, double q);
/// Quadratic approximation phi~(q) = q (a|q| + b).
inline double phi_qa(const Link& link, double q) {
    return q * (link.qa_a * std::abs(q) + link.qa_b);
}
inline double dphi_qa(const Link& link, double q) {
    return 2.0 * link.qa_a * std::abs(q) + link.qa_b;
}
double phi(const Link& link, double q, HeadLossModel mode);
double dphi(const Link& link, double q, HeadLossModel mode);

struct QaFit {
    double a = 0.0, b = 0.0;
    double max_rel_err = 0.0;  // over a 1000-point grid, eps = 1e-6 m
};

/// Least-squares fit of phi~(q) = q(a|q|+b) to the link's native curve over
/// [q_lo, q_hi] on a 200-point grid, with (a, b) projected to >= 0.
QaFit fit_quadratic(const Link& link, double q_lo, double q_hi);

/// Fits QA coefficients for every link of the model over the per-link flow
/// range taken from the bounds (union over time steps).
void fit_all_quadratics(NetworkModel& model, const BoundsSet& bounds);

struct BoundsOptions {
    double u_max = 2.0;         // m/s, default maximum velocity
    double alpha_max = 0.025;   // m3/s, flushing cap at AFV candidates
    double regulatory_head = 15.0;  // m, pressure floor at demand nodes
    HeadLossModel theta_model = HeadLossModel::HW;
};

/// Derives variable bounds from velocity caps, regulatory pressure, and
/// source heads.
BoundsSet derive_bounds(const NetworkModel& model, const Mat& demands,
                        const Mat& source_heads, const BoundsOptions& opt);

/// Parses the EPANET-INP subset and returns a finalized model plus the
/// scenario implied by [PATTERNS]/[TIMES]. Bounds are left empty; call
/// derive_bounds afterwards.
struct ParsedNetwork {
    NetworkModel model;
    Scenario scenario;
    std::vector<std::string> warnings;
};
ParsedNetwork parse_network(const std::string& text);
ParsedNetwork parse_network_file(const std::string& path);

} // namespace wdn
