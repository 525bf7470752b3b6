// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "wdn/objectives.hpp"

using namespace wdn;

namespace {

struct Fixture {
    std::unique_ptr<testutil::Net> net;
    HydraulicState state;

    Fixture() : net(testutil::load("toy2.inp")) {
        NetworkSolver solver(net->model);
        ControlSettings zero = ControlSettings::zeros(net->scenario.n_t, net->model.np(),
                                                      net->model.nn());
        state = solver.solve_eps(net->scenario, zero, HeadLossModel::HW);
    }
};

} // namespace

TEST_CASE("average zone pressure matches its definition") {
    Fixture f;
    const NetworkModel& m = f.net->model;

    // independent recomputation: weighted pressure-above-elevation, averaged
    // over time
    double expected = 0.0;
    for (int t = 0; t < f.state.n_t(); ++t)
        for (int i = 0; i < m.nn(); ++i)
            expected += m.nodes[i].azp_weight * (f.state.h(t, i) - m.nodes[i].elevation);
    expected /= f.state.n_t();

    CHECK(azp(m, f.state) == doctest::Approx(expected).epsilon(1e-12));
    Vec per_step = azp_per_step(m, f.state);
    REQUIRE(per_step.size() == f.state.n_t());
    CHECK(per_step.mean() == doctest::Approx(azp(m, f.state)).epsilon(1e-12));
    CHECK(azp(m, f.state) > 0.0);
}

TEST_CASE("self-cleaning capacity matches its definition and stays in [0, 1]") {
    Fixture f;
    const NetworkModel& m = f.net->model;

    double expected = 0.0;
    for (int t = 0; t < f.state.n_t(); ++t)
        for (int j = 0; j < m.np(); ++j) {
            double u = std::abs(f.state.q(t, j)) / m.links[j].area;
            if (u > m.links[j].u_min) expected += m.links[j].scc_weight;
        }
    expected /= f.state.n_t();

    double indicator = scc(m, f.state, /*smooth=*/false);
    CHECK(indicator == doctest::Approx(expected).epsilon(1e-12));
    CHECK(indicator >= 0.0);
    CHECK(indicator <= 1.0);

    double smooth = scc(m, f.state, /*smooth=*/true, 50.0);
    CHECK(smooth >= 0.0);
    CHECK(smooth <= 1.0 + 1e-9);
}

TEST_CASE("sigmoid term limits") {
    // at the threshold the rising branch contributes exactly one half
    CHECK(scc_sigmoid_term(0.2, 0.2, 50.0) == doctest::Approx(0.5).epsilon(1e-4));
    // far above / below the threshold it saturates
    CHECK(scc_sigmoid_term(1.0, 0.2, 50.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(scc_sigmoid_term(0.0, 0.2, 50.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));
    // symmetric in the flow sign
    CHECK(scc_sigmoid_term(-0.7, 0.2, 50.0) ==
          doctest::Approx(scc_sigmoid_term(0.7, 0.2, 50.0)).epsilon(1e-12));
    // sharper curvature moves the value toward the indicator
    double loose = scc_sigmoid_term(0.25, 0.2, 20.0);
    double sharp = scc_sigmoid_term(0.25, 0.2, 200.0);
    CHECK(sharp > loose);
}

TEST_CASE("pressure variation on hand-built states") {
    HydraulicState s;
    s.q = Mat::Zero(3, 1);
    s.theta = Mat::Zero(3, 1);
    s.h = Mat(3, 2);
    s.h << 10.0, 20.0,
           12.0, 20.0,
           11.0, 23.0;
    // inter-step plus wrap-around: (2^2+0) + (1^2+3^2) + (1^2+3^2) = 24
    CHECK(pressure_variation(s) == doctest::Approx(24.0).epsilon(1e-12));

    s.h.row(1) = s.h.row(0);
    s.h.row(2) = s.h.row(0);
    CHECK(pressure_variation(s) == 0.0);
}

TEST_CASE("nodal pressure ranges and their distribution table") {
    Fixture f;
    PressureRangeStats stats = nodal_pressure_ranges(f.net->model, f.state);
    REQUIRE(stats.range.size() == f.net->model.nn());
    CHECK(stats.range.minCoeff() >= 0.0);

    // the CDF is a sorted copy of the ranges with cumulative fractions
    REQUIRE(static_cast<int>(stats.cdf.size()) == f.net->model.nn());
    for (size_t k = 1; k < stats.cdf.size(); ++k) {
        CHECK(stats.cdf[k].first >= stats.cdf[k - 1].first);
        CHECK(stats.cdf[k].second > stats.cdf[k - 1].second);
    }
    CHECK(stats.cdf.back().second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats.cdf.back().first == doctest::Approx(stats.range.maxCoeff()).epsilon(1e-12));
}

TEST_CASE("combined evaluation agrees with the individual objectives") {
    Fixture f;
    const NetworkModel& m = f.net->model;
    ObjectiveValue v = evaluate_objectives(m, f.state);
    CHECK(v.azp == doctest::Approx(azp(m, f.state)).epsilon(1e-12));
    CHECK(v.scc_indicator == doctest::Approx(scc(m, f.state, false)).epsilon(1e-12));
    CHECK(v.scc_sigmoid == doctest::Approx(scc(m, f.state, true, 50.0)).epsilon(1e-12));
    CHECK(v.pv == doctest::Approx(pressure_variation(f.state)).epsilon(1e-12));
    REQUIRE(v.azp_per_step.size() == f.state.n_t());
    REQUIRE(v.scc_indicator_per_step.size() == f.state.n_t());
}
