// SPDX-License-Identifier: MIT
#pragma once

#include <optional>

#include "wdn/network.hpp"

namespace wdn {

/// Actuator settings over the horizon: PCV head losses (n_t x n_p) and
/// flushing demands (n_t x n_n). Entries must be zero off the active valves.
struct ControlSettings {
    Mat eta;
    Mat alpha;
    static ControlSettings zeros(int n_t, int n_p, int n_n) {
        ControlSettings s;
        s.eta = Mat::Zero(n_t, n_p);
        s.alpha = Mat::Zero(n_t, n_n);
        return s;
    }
};

struct SolverOptions {
    double tol = 1e-9;              // Newton target on loop residual, m
    double accept_energy = 1e-6;    // m
    double accept_mass = 1e-8;      // m3/s
    int max_iterations = 50;
    int max_halvings = 10;
    double reg_eps = 1e-6;          // m3/s, derivative regularization flow
};

/// One converged time step. Carries the final Jacobian factorization so a
/// caller can differentiate the solution with respect to actuator settings.
struct StepSolution {
    Vec q, h, theta;
    double residual_energy = 0.0;  // inf-norm of Eq. energy rows, m
    double residual_mass = 0.0;    // inf-norm of mass rows, m3/s
    int iterations = 0;
    bool converged = false;
    Vec dphi_reg;                  // regularized phi'(q), n_p
};

struct HydraulicState {
    Mat q, h, theta;               // n_t rows
    Vec residual_energy, residual_mass;
    int n_t() const { return static_cast<int>(q.rows()); }
};

/// Sensitivities of one step's state with respect to a control vector
/// u = [eta at pcv_links..., alpha at afv_nodes...].
struct StepSensitivity {
    Mat dq;  // n_p x m
    Mat dh;  // n_n x m
};

/// Null-space Newton solver for the per-step conservation system.
/// The spanning forest (rooted at sources), loop basis, and tree-flow
/// operator are built once per network and reused across steps.
class NetworkSolver {
  public:
    explicit NetworkSolver(const NetworkModel& model);

    StepSolution solve_step(const Vec& demand, const Vec& source_head, const Vec& eta,
                            const Vec& alpha, HeadLossModel mode,
                            const SolverOptions& opt = {}) const;

    /// Extended-period simulation; steps are independent and solved in
    /// parallel. Throws on the first failing step (smallest index).
    HydraulicState solve_eps(const Scenario& scenario, const ControlSettings& settings,
                             HeadLossModel mode, const SolverOptions& opt = {}) const;

    /// Serial reference implementation of solve_eps, kept for testing and
    /// benchmark comparison. Produces bitwise-identical results.
    HydraulicState solve_eps_serial(const Scenario& scenario, const ControlSettings& settings,
                                    HeadLossModel mode, const SolverOptions& opt = {}) const;

    StepSensitivity sensitivities(const StepSolution& sol, const std::vector<int>& pcv_links,
                                  const std::vector<int>& afv_nodes) const;

    /// Tree flows satisfying mass conservation for the given junction
    /// injections with all chord flows zero.
    Vec tree_flow(const Vec& net_demand) const;

    int n_chords() const { return static_cast<int>(chords_.size()); }
    const NetworkModel& model() const { return *model_; }

  private:
    const NetworkModel* model_;
    std::vector<int> parent_edge_;   // per junction
    std::vector<int> parent_flat_;   // per junction; flat id (junction i, or n_n + source k)
    std::vector<int> bfs_order_;     // junctions in discovery order
    std::vector<int> chords_;        // link indices not in the forest
    SpMat nullbasis_;                // n_p x n_c

    Vec recover_heads(const Vec& source_head, const Vec& theta, const Vec& eta) const;
};

/// Recomputes energy and mass residual norms from scratch (theta taken as
/// phi(q) of the given model); independent of the solver internals.
struct ResidualReport {
    Vec energy;  // per step, m
    Vec mass;    // per step, m3/s
};
ResidualReport residual_report(const NetworkModel& model, const HydraulicState& state,
                               const Scenario& scenario, const ControlSettings& settings,
                               HeadLossModel mode = HeadLossModel::HW);

} // namespace wdn
