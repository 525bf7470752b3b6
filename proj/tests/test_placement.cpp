// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "support.hpp"
#include "wdn/placement.hpp"

using namespace wdn;

TEST_CASE("relaxation is a certified lower bound on the polished optimum") {
    auto net = testutil::load("toy1.inp");
    NetworkSolver solver(net->model);
    ObjectiveSpec obj;  // AZP

    RelaxedProblem relaxed = build_relaxation(net->model, net->scenario, 1, 0, obj);
    REQUIRE(static_cast<int>(relaxed.steps.size()) == net->scenario.n_t);
    RelaxationSolution rel = solve_relaxation(relaxed);
    CHECK(rel.z.size() == net->model.np());
    CHECK(rel.z.minCoeff() >= -1e-8);
    // relaxed placement mass respects the valve budget
    CHECK(rel.z.sum() <= 1.0 + 1e-6);

    PlacementSolution sol = solve_vp_minlp(solver, net->scenario, 1, 0, obj);
    REQUIRE(sol.control.feasible);
    CHECK(rel.bound <= sol.control.scalar_objective + 1e-6);
    CHECK(sol.relaxation_bound <= sol.control.scalar_objective + 1e-6);
    CHECK(sol.gap >= -1e-9);
}

TEST_CASE("bound tightening keeps the relaxation valid") {
    auto net = testutil::load("toy2.inp");
    ObjectiveSpec obj;

    RelaxedProblem loose = build_relaxation(net->model, net->scenario, 1, 1, obj);
    double bound_before = solve_relaxation(loose).bound;

    RelaxedProblem tight = build_relaxation(net->model, net->scenario, 1, 1, obj);
    BoundsSet tightened = obbt(tight, 1);
    double bound_after = solve_relaxation(tight).bound;

    // tightened boxes are contained in the originals...
    const BoundsSet& orig = net->scenario.bounds;
    CHECK((tightened.q_lo - orig.q_lo).minCoeff() >= -1e-7);
    CHECK((orig.q_hi - tightened.q_hi).minCoeff() >= -1e-7);
    // ...so the bound can only improve (up to solver tolerance)
    CHECK(bound_after >= bound_before - 1e-6);
}

TEST_CASE("rounding is deterministic, deduplicated, and respects the budgets") {
    auto net = testutil::load("toy3.inp");
    ObjectiveSpec obj;
    RelaxedProblem relaxed = build_relaxation(net->model, net->scenario, 2, 1, obj);
    RelaxationSolution rel = solve_relaxation(relaxed);

    auto a = randomized_rounding(rel, net->model, 2, 1, 8, 777);
    auto b = randomized_rounding(rel, net->model, 2, 1, 8, 777);
    CHECK(a == b);

    REQUIRE(!a.empty());
    CHECK(a.size() <= 8);
    for (const ValveConfig& c : a) {
        CHECK(c.n_v() <= 2);
        CHECK(c.n_f() <= 1);
        CHECK(std::is_sorted(c.pcv_links.begin(), c.pcv_links.end()));
        CHECK(std::adjacent_find(c.pcv_links.begin(), c.pcv_links.end()) == c.pcv_links.end());
    }
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());

    // a different seed may select different candidates but the same counts
    auto c = randomized_rounding(rel, net->model, 2, 1, 8, 778);
    for (const ValveConfig& cfg : c) CHECK(cfg.n_v() <= 2);
}

TEST_CASE("heuristic matches exhaustive enumeration on a small network") {
    auto net = testutil::load("toy1.inp");
    const NetworkModel& m = net->model;
    NetworkSolver solver(m);
    ObjectiveSpec obj;

    PlacementSolution heur = solve_vp_minlp(solver, net->scenario, 1, 0, obj);
    REQUIRE(heur.control.feasible);
    CHECK(heur.config.n_v() == 1);

    // brute force: every single-valve placement, both directions each
    double best = 1e100;
    for (int j = 0; j < m.np(); ++j) {
        ValveConfig config;
        config.pcv_links = {j};
        DirectionSweep sweep = enumerate_directions(solver, net->scenario, config, obj);
        if (sweep.best.feasible) best = std::min(best, sweep.best.scalar_objective);
    }
    REQUIRE(best < 1e100);
    CHECK(heur.control.scalar_objective <= best * 1.05 + 1e-9);
}

TEST_CASE("pinned placement skips the location search") {
    auto net = testutil::load("toy1.inp");
    NetworkSolver solver(net->model);
    ObjectiveSpec obj;
    PlacementOptions opt;
    opt.fixed_pcv_links = {net->model.link_index("P1")};

    PlacementSolution sol = solve_vp_minlp(solver, net->scenario, 1, 0, obj, opt);
    REQUIRE(sol.control.feasible);
    CHECK(sol.config.pcv_links == opt.fixed_pcv_links);
}
