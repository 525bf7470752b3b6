// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "wdn/control.hpp"

using namespace wdn;

namespace {

double baseline_azp(const testutil::Net& net, const NetworkSolver& solver) {
    ControlSettings zero = ControlSettings::zeros(net.scenario.n_t, net.model.np(),
                                                  net.model.nn());
    return azp(net.model, solver.solve_eps(net.scenario, zero, HeadLossModel::HW));
}

} // namespace

TEST_CASE("scalarization orientations") {
    ObjectiveSpec spec;
    spec.kind = ObjectiveKind::AZP;
    CHECK(spec.scalar(22.5, 0.6) == doctest::Approx(22.5));

    spec.kind = ObjectiveKind::SCC;
    CHECK(spec.scalar(22.5, 0.6) == doctest::Approx(-0.6));

    spec.kind = ObjectiveKind::Weighted;
    spec.omega = 0.0;
    spec.norm = {18.0, 30.0, 0.8, 0.6};
    // omega = 0 reduces to the normalized AZP term alone
    CHECK(spec.scalar(18.0, 0.6) == doctest::Approx(0.0).scale(1.0));
    CHECK(spec.scalar(30.0, 0.6) == doctest::Approx(1.0));
    spec.omega = 1.0;
    // omega = 1 reduces to the normalized SCC deficit alone
    CHECK(spec.scalar(30.0, 0.8) == doctest::Approx(0.0).scale(1.0));
    CHECK(spec.scalar(30.0, 0.6) == doctest::Approx(1.0));
}

TEST_CASE("empty configuration reproduces the plain simulation") {
    auto net = testutil::load("toy1.inp");
    NetworkSolver solver(net->model);
    ValveConfig empty;
    ObjectiveSpec obj;

    ControlSolution sol = solve_vc_nlp(solver, net->scenario, empty, obj);
    REQUIRE(sol.feasible);
    CHECK(sol.settings.eta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.settings.alpha.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.objective.azp == doctest::Approx(baseline_azp(*net, solver)).epsilon(1e-9));
}

TEST_CASE("pressure control lowers AZP without breaking the pressure floor") {
    auto net = testutil::load("toy1.inp");
    const NetworkModel& m = net->model;
    NetworkSolver solver(m);
    double base = baseline_azp(*net, solver);

    ValveConfig config;
    config.pcv_links = {m.link_index("P1")};
    config.directions = {+1};
    ObjectiveSpec obj;  // AZP

    ControlSolution sol = solve_vc_nlp(solver, net->scenario, config, obj);
    REQUIRE(sol.feasible);
    CHECK(sol.converged);
    CHECK(sol.objective.azp < base);
    CHECK(sol.scalar_objective == doctest::Approx(sol.objective.azp).epsilon(1e-12));

    // settings live only on the active valve, in its declared direction
    for (int t = 0; t < net->scenario.n_t; ++t)
        for (int j = 0; j < m.np(); ++j)
            if (j != config.pcv_links[0]) CHECK(sol.settings.eta(t, j) == 0.0);
    CHECK(sol.settings.eta.col(config.pcv_links[0]).minCoeff() >= 0.0);
    CHECK(sol.settings.alpha.cwiseAbs().maxCoeff() == 0.0);

    // regulatory floor: 15 m above elevation at demand nodes, within the
    // exact-model feasibility tolerance
    for (int t = 0; t < net->scenario.n_t; ++t)
        for (int i = 0; i < m.nn(); ++i)
            CHECK(sol.state.h(t, i) >=
                  m.nodes[i].elevation + 15.0 - ScpOptions{}.feas_tol_exact - 1e-9);
}

TEST_CASE("flushing raises self-cleaning capacity") {
    auto net = testutil::load("toy2.inp");
    const NetworkModel& m = net->model;
    NetworkSolver solver(m);
    ControlSettings zero = ControlSettings::zeros(net->scenario.n_t, m.np(), m.nn());
    double base = scc(m, solver.solve_eps(net->scenario, zero, HeadLossModel::HW), true);

    ValveConfig config;
    config.afv_nodes = {m.node_index("J4")};
    ObjectiveSpec obj;
    obj.kind = ObjectiveKind::SCC;

    ControlSolution sol = solve_vc_nlp(solver, net->scenario, config, obj);
    REQUIRE(sol.feasible);
    CHECK(sol.objective.scc_sigmoid >= base - 1e-9);
    CHECK(sol.settings.alpha.minCoeff() >= 0.0);
    CHECK(sol.settings.alpha.maxCoeff() <= 0.025 + 1e-9);
    // flushing only at the configured node
    for (int i = 0; i < m.nn(); ++i)
        if (i != config.afv_nodes[0]) CHECK(sol.settings.alpha.col(i).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warm start is not worse than a cold start") {
    auto net = testutil::load("toy1.inp");
    NetworkSolver solver(net->model);
    ValveConfig config;
    config.pcv_links = {net->model.link_index("P1")};
    config.directions = {+1};
    ObjectiveSpec obj;

    ControlSolution cold = solve_vc_nlp(solver, net->scenario, config, obj);
    REQUIRE(cold.feasible);
    ControlSolution warm = solve_vc_nlp(solver, net->scenario, config, obj, cold.settings);
    REQUIRE(warm.feasible);
    CHECK(warm.scalar_objective <= cold.scalar_objective + 1e-6);
}

TEST_CASE("direction enumeration covers both assignments and keeps the best") {
    auto net = testutil::load("toy1.inp");
    NetworkSolver solver(net->model);
    ValveConfig config;
    config.pcv_links = {net->model.link_index("P2")};
    ObjectiveSpec obj;

    DirectionSweep sweep = enumerate_directions(solver, net->scenario, config, obj);
    CHECK(sweep.entries.size() == 2);
    REQUIRE(sweep.best.feasible);
    REQUIRE(sweep.best_directions.size() == 1);
    for (const DirectionSweepEntry& e : sweep.entries)
        if (e.feasible) CHECK(sweep.best.scalar_objective <= e.scalar_objective + 1e-9);
}
