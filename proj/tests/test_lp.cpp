// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "wdn/lp.hpp"

using namespace wdn;

namespace {

SpMat sparse(int rows, int cols, const std::vector<Eigen::Triplet<double>>& trips) {
    SpMat m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

} // namespace

// Reference optima below were computed with an independent simplex solver
// and frozen here.

TEST_CASE("equality plus inequalities, box-bounded") {
    // min -2x0 - 3x1 + x2
    //     x0 + x1 + x2 = 4
    //     x0 - x1      <= 1
    //     2x1 + x2     <= 6
    //     0 <= x <= 3
    LpProblem p;
    p.c = Vec{{-2.0, -3.0, 1.0}};
    p.a_eq = sparse(1, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}});
    p.b_eq = Vec{{4.0}};
    p.a_ub = sparse(2, 3, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 1, 2.0}, {1, 2, 1.0}});
    p.b_ub = Vec{{1.0, 6.0}};
    p.lb = Vec::Zero(3);
    p.ub = Vec::Constant(3, 3.0);

    LpResult r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-11.0).epsilon(1e-7));
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(r.x(2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(r.gap <= 1e-7);
    CHECK(r.primal_infeasibility <= 1e-7);
    // the dual bound must bracket the optimum from below
    CHECK(r.lower_bound <= r.objective + 1e-7);
    CHECK(r.lower_bound == doctest::Approx(-11.0).epsilon(1e-5));
}

TEST_CASE("inequalities only, active box bound") {
    // min x0 + 4x1
    //     -x0 +  x1 <= 2
    //     -x0 - 2x1 <= -3
    //     -10 <= x <= 10      -> x* = (10, -3.5), obj -4
    LpProblem p;
    p.c = Vec{{1.0, 4.0}};
    p.a_eq = SpMat(0, 2);
    p.b_eq = Vec(0);
    p.a_ub = sparse(2, 2, {{0, 0, -1.0}, {0, 1, 1.0}, {1, 0, -1.0}, {1, 1, -2.0}});
    p.b_ub = Vec{{2.0, -3.0}};
    p.lb = Vec::Constant(2, -10.0);
    p.ub = Vec::Constant(2, 10.0);

    LpResult r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(-4.0).epsilon(1e-7));
    CHECK(r.x(0) == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(-3.5).epsilon(1e-6));
    CHECK(r.lower_bound <= r.objective + 1e-7);
}

TEST_CASE("infeasible boxes are reported, not silently clipped") {
    // x0 + x1 = 5 with 0 <= x <= 1
    LpProblem p;
    p.c = Vec{{1.0, 1.0}};
    p.a_eq = sparse(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
    p.b_eq = Vec{{5.0}};
    p.a_ub = SpMat(0, 2);
    p.b_ub = Vec(0);
    p.lb = Vec::Zero(2);
    p.ub = Vec::Constant(2, 1.0);

    LpResult r = solve_lp(p);
    CHECK(r.status == LpStatus::Infeasible);
}

TEST_CASE("solution satisfies its own constraint system") {
    LpProblem p;
    p.c = Vec{{-2.0, -3.0, 1.0}};
    p.a_eq = sparse(1, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}});
    p.b_eq = Vec{{4.0}};
    p.a_ub = sparse(2, 3, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 1, 2.0}, {1, 2, 1.0}});
    p.b_ub = Vec{{1.0, 6.0}};
    p.lb = Vec::Zero(3);
    p.ub = Vec::Constant(3, 3.0);

    LpResult r = solve_lp(p);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK((p.a_eq * r.x - p.b_eq).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK((p.a_ub * r.x - p.b_ub).maxCoeff() <= 1e-7);
    for (int i = 0; i < p.n(); ++i) {
        CHECK(r.x(i) >= p.lb(i) - 1e-7);
        CHECK(r.x(i) <= p.ub(i) + 1e-7);
    }
}
