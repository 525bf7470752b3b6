// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"
#include "wdn/adaptive.hpp"

using namespace wdn;

namespace {

struct Fixture {
    std::unique_ptr<testutil::Net> net;
    std::unique_ptr<NetworkSolver> solver;
    ValveConfig config;

    Fixture() : net(testutil::load("toy3.inp")) {
        solver = std::make_unique<NetworkSolver>(net->model);
        config.pcv_links = {net->model.link_index("P1")};
        config.directions = {+1};
        config.afv_nodes = {net->model.node_index("J4")};
    }
};

} // namespace

TEST_CASE("demand windows bracket the extreme hours") {
    auto net = testutil::load("toy3.inp");  // multipliers 0.6 0.9 1.3 1.2
    Window peak = peak_demand_window(net->scenario);
    CHECK(peak == Window{2, 3});
    Window low = min_demand_window(net->scenario);
    CHECK(low == Window{0, 1});
    CHECK(peak.length() == 1);
    CHECK(peak.contains(2));
    CHECK(!peak.contains(3));
}

TEST_CASE("empty window degenerates to the pressure-minimizing plan") {
    Fixture f;
    AdaptivePlan plan = build_plan(*f.solver, f.net->scenario, f.config, Window{0, 0});
    REQUIRE(static_cast<int>(plan.mode_per_step.size()) == f.net->scenario.n_t);
    for (ControlMode m : plan.mode_per_step) CHECK(m == ControlMode::AZP);

    // identical to solving the AZP problem directly
    ObjectiveSpec obj;
    ControlSolution azp_sol = solve_vc_nlp(*f.solver, f.net->scenario, f.config, obj);
    REQUIRE(azp_sol.feasible);
    CHECK((plan.settings.eta - azp_sol.settings.eta).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((plan.settings.alpha - azp_sol.settings.alpha).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(plan.metrics.azp == doctest::Approx(azp_sol.objective.azp).epsilon(1e-9));
}

TEST_CASE("spliced plan is consistent with its own re-simulation") {
    Fixture f;
    Window window = peak_demand_window(f.net->scenario);
    AdaptivePlan plan = build_plan(*f.solver, f.net->scenario, f.config, window);

    for (int t = 0; t < f.net->scenario.n_t; ++t)
        CHECK(plan.mode_per_step[t] == (window.contains(t) ? ControlMode::SCC
                                                           : ControlMode::AZP));

    // the stored state is exactly the hydraulics of the stored settings
    HydraulicState replay = f.solver->solve_eps(f.net->scenario, plan.settings,
                                                HeadLossModel::HW);
    CHECK((plan.state.h - replay.h).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((plan.state.q - replay.q).cwiseAbs().maxCoeff() <= 1e-9);

    // window aggregates match the per-step objective rows
    Vec azp_steps = azp_per_step(f.net->model, plan.state);
    double expect = 0.0;
    for (int t = window.begin; t < window.end; ++t) expect += azp_steps(t);
    CHECK(plan.window_azp == doctest::Approx(expect / window.length()).epsilon(1e-9));

    REQUIRE(plan.setting_delta.size() == f.net->scenario.n_t);
    CHECK(plan.setting_delta.minCoeff() >= 0.0);
    CHECK(plan.pv >= 0.0);
}

TEST_CASE("switching to cleaning mode trades pressure for velocity in-window") {
    Fixture f;
    Window window = peak_demand_window(f.net->scenario);
    AdaptivePlan base = build_plan(*f.solver, f.net->scenario, f.config, Window{0, 0});
    AdaptivePlan plan = build_plan(*f.solver, f.net->scenario, f.config, window);

    Vec base_scc = scc_per_step(f.net->model, base.state, true);
    double base_window_scc = 0.0;
    for (int t = window.begin; t < window.end; ++t) base_window_scc += base_scc(t);
    base_window_scc /= window.length();

    // in-window cleaning capacity must not fall below the pressure-only plan
    CHECK(plan.window_scc >= base_window_scc - 1e-6);
}

TEST_CASE("scenario comparison leads with the baseline and is deterministic") {
    Fixture f;
    ScenarioComparison cmp = compare_scenarios(*f.solver, f.net->scenario, f.config);
    REQUIRE(cmp.plans.size() == 3);  // baseline + peak + minimum windows
    CHECK(cmp.plans[0].window.length() == 0);
    CHECK(cmp.plans[1].window == peak_demand_window(f.net->scenario));
    CHECK(cmp.plans[2].window == min_demand_window(f.net->scenario));

    ScenarioComparison again = compare_scenarios(*f.solver, f.net->scenario, f.config);
    for (size_t k = 0; k < cmp.plans.size(); ++k) {
        CHECK((cmp.plans[k].settings.eta - again.plans[k].settings.eta).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK(cmp.plans[k].metrics.azp == again.plans[k].metrics.azp);
    }
}
