// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "wdn/network.hpp"

using namespace wdn;

TEST_CASE("Hazen-Williams and minor-loss resistances") {
    // frozen from the closed-form expressions evaluated independently
    CHECK(hw_resistance(100.0, 130.0, 0.2) == doctest::Approx(329.476331739).epsilon(1e-9));
    CHECK(valve_resistance(6.2, 0.15) == doctest::Approx(1011.92397954).epsilon(1e-9));
}

TEST_CASE("native head loss curve and derivative") {
    Link link;
    link.resistance = hw_resistance(100.0, 130.0, 0.2);
    link.loss_exponent = 1.852;
    CHECK(phi_native(link, 0.01) == doctest::Approx(0.0651364704983).epsilon(1e-9));
    // odd symmetry
    CHECK(phi_native(link, -0.01) == doctest::Approx(-0.0651364704983).epsilon(1e-9));
    // derivative against central differences
    const double h = 1e-7;
    double fd = (phi_native(link, 0.01 + h) - phi_native(link, 0.01 - h)) / (2 * h);
    CHECK(dphi_native(link, 0.01) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("parser builds a consistent model from toy1") {
    auto net = testutil::load("toy1.inp");
    const NetworkModel& m = net->model;

    CHECK(m.nn() == 3);
    CHECK(m.n0() == 1);
    CHECK(m.np() == 4);
    CHECK(m.node_index("J2") == 1);
    CHECK(m.source_index("R1") == 0);
    CHECK(m.link_index("P4") == 3);
    CHECK(m.node_index("NOPE") == -1);

    int p1 = m.link_index("P1");
    CHECK(m.links[p1].length == doctest::Approx(100.0));
    CHECK(m.links[p1].diameter == doctest::Approx(0.2));
    CHECK(m.links[p1].resistance ==
          doctest::Approx(hw_resistance(100.0, 130.0, 0.2)).epsilon(1e-12));
    CHECK(m.links[p1].area == doctest::Approx(0.0314159265359).epsilon(1e-9));

    // demands are converted from L/s
    CHECK(m.nodes[m.node_index("J1")].base_demand == doctest::Approx(0.005));

    // weights are normalized distributions
    double wsum = 0.0, ssum = 0.0;
    for (const Node& n : m.nodes) wsum += n.azp_weight;
    for (const Link& l : m.links) ssum += l.scc_weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssum == doctest::Approx(1.0).epsilon(1e-12));

    // incidence rows sum to zero across (a12 | a10)
    Vec row_sum = m.a12 * Vec::Ones(m.nn()) + m.a10 * Vec::Ones(m.n0());
    CHECK(row_sum.cwiseAbs().maxCoeff() <= 1e-15);

    // the two-step pattern lands in the scenario
    CHECK(net->scenario.n_t == 2);
    CHECK(net->scenario.demands(0, m.node_index("J2")) == doctest::Approx(0.008 * 0.8));
    CHECK(net->scenario.demands(1, m.node_index("J2")) == doctest::Approx(0.008 * 1.2));
    CHECK(net->scenario.source_heads(0, 0) == doctest::Approx(50.0));
}

TEST_CASE("parser error paths") {
    CHECK_THROWS_AS(parse_network_file(testutil::data_path("does_not_exist.inp")), ParseError);
    CHECK_THROWS_AS(parse_network("[JUNCTIONS]\nJ1 10 5\n[PIPES]\nP1 J1 J9 100 200 130\n"
                                  "[RESERVOIRS]\nR1 50\n"),
                    ValidationError);
}

TEST_CASE("derived bounds respect hydraulic limits") {
    auto net = testutil::load("toy2.inp");
    const NetworkModel& m = net->model;
    const BoundsSet& b = net->scenario.bounds;

    REQUIRE(b.q_lo.rows() == net->scenario.n_t);
    for (int t = 0; t < net->scenario.n_t; ++t) {
        for (int j = 0; j < m.np(); ++j) {
            CHECK(b.q_lo(t, j) <= b.q_hi(t, j));
            // velocity cap of 2 m/s
            CHECK(b.q_hi(t, j) <= 2.0 * m.links[j].area + 1e-12);
            CHECK(b.eta_lo(t, j) <= 0.0);
            CHECK(b.eta_hi(t, j) >= 0.0);
        }
        double h0_max = net->scenario.source_heads.row(t).maxCoeff();
        for (int i = 0; i < m.nn(); ++i) {
            // regulatory floor and source ceiling
            CHECK(b.h_lo(t, i) == doctest::Approx(m.nodes[i].elevation + 15.0));
            CHECK(b.h_hi(t, i) <= h0_max + 1e-9);
            CHECK(b.alpha_hi(t, i) == doctest::Approx(0.025));
        }
    }
}

TEST_CASE("quadratic fit stays within tolerance and brackets the curve") {
    auto net = testutil::load("toy1.inp");
    for (const Link& link : net->model.links) {
        CHECK(link.qa_a >= 0.0);
        CHECK(link.qa_b >= 0.0);
        CHECK(link.qa_max_rel_err <= 0.05);
    }

    // direct fit over a symmetric range: odd model, so phi_qa(0) == 0
    const Link& l = net->model.links[0];
    QaFit fit = fit_quadratic(l, -0.02, 0.02);
    Link qa = l;
    qa.qa_a = fit.a;
    qa.qa_b = fit.b;
    CHECK(phi_qa(qa, 0.0) == 0.0);
    // the recorded error is relative to the largest head loss on the range
    double scale = std::max(std::abs(phi_native(l, -0.02)), std::abs(phi_native(l, 0.02)));
    for (double q : {-0.018, -0.005, 0.004, 0.019}) {
        double err = std::abs(phi_qa(qa, q) - phi_native(l, q)) / scale;
        CHECK(err <= fit.max_rel_err + 1e-9);
    }
    CHECK_THROWS_AS(fit_quadratic(l, 0.02, 0.02), DomainError);
}
