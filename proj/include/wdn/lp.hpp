// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Sparse>
#include <limits>

#include "wdn/network.hpp"

namespace wdn {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub.
struct LpProblem {
    Vec c;
    SpMat a_eq;
    Vec b_eq;
    SpMat a_ub;
    Vec b_ub;
    Vec lb, ub;
    int n() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { Optimal, MaxIterations, Infeasible };

struct LpResult {
    LpStatus status = LpStatus::MaxIterations;
    Vec x;
    double objective = 0.0;
    Vec y_eq;       // equality multipliers
    Vec z_ineq;     // multipliers of the stacked inequality system (>= 0)
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double gap = 0.0;
    int iterations = 0;
    /// Certified lower bound on the optimum from the dual point, with the
    /// dual residual absorbed through the variable boxes. Requires all
    /// variables to have finite bounds; NaN otherwise.
    double lower_bound = 0.0;
};

struct LpOptions {
    int max_iterations = 100;
    double tol_feas = 1e-8;
    double tol_gap = 1e-9;
};

/// Mehrotra predictor-corrector interior point method on the sparse
/// augmented KKT system.
LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {});

} // namespace wdn
