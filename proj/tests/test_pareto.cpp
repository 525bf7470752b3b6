// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <vector>

#include "wdn/pareto.hpp"

using namespace wdn;

namespace {

// Quadratic-time dominance oracle: survivor minimizes the first coordinate
// and maximizes the second; among exact duplicates only the earliest
// survives.
std::vector<int> oracle(const std::vector<std::pair<double, double>>& pts) {
    std::vector<int> keep;
    for (size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (j == i) continue;
            bool weak = pts[j].first <= pts[i].first && pts[j].second >= pts[i].second;
            bool strict = pts[j].first < pts[i].first || pts[j].second > pts[i].second;
            if (weak && strict) dominated = true;
            if (weak && !strict && j < i) dominated = true;  // duplicate, earlier wins
        }
        if (!dominated) keep.push_back(static_cast<int>(i));
    }
    return keep;
}

} // namespace

TEST_CASE("non-dominated indices match the pairwise oracle on random clouds") {
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // a coarse grid forces plenty of exact ties and duplicates
    std::uniform_int_distribution<int> grid(0, 9);

    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::pair<double, double>> pts(60);
        for (auto& p : pts) {
            if (rep % 2 == 0)
                p = {unif(rng), unif(rng)};
            else
                p = {0.1 * grid(rng), 0.1 * grid(rng)};
        }
        CHECK(non_dominated_indices(pts) == oracle(pts));
    }
}

TEST_CASE("non-dominated indices, hand-picked cases") {
    using P = std::pair<double, double>;
    CHECK(non_dominated_indices({}) == std::vector<int>{});
    CHECK(non_dominated_indices({P{1.0, 1.0}}) == std::vector<int>{0});
    // identical points collapse to the first
    CHECK(non_dominated_indices({P{1, 1}, P{1, 1}, P{1, 1}}) == std::vector<int>{0});
    // a clean staircase survives entirely
    CHECK(non_dominated_indices({P{1, 1}, P{2, 2}, P{3, 3}}) == std::vector<int>{0, 1, 2});
    // one point dominating everything
    CHECK(non_dominated_indices({P{2, 1}, P{1, 2}, P{3, 0}}) == std::vector<int>{1});
}

TEST_CASE("default weights are an inclusive uniform grid") {
    std::vector<double> w = default_weights(10);
    REQUIRE(w.size() == 10);
    CHECK(w.front() == 0.0);
    CHECK(w.back() == 1.0);
    for (size_t k = 1; k < w.size(); ++k)
        CHECK(w[k] - w[k - 1] == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

    CHECK(default_weights(2) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("pareto filter marks dominated points and skips unsolved ones") {
    auto mk = [](double azp_value, double scc_value, bool solved) {
        ParetoPoint p;
        p.azp = azp_value;
        p.scc_indicator = scc_value;
        p.scc_sigmoid = scc_value;
        p.solved = solved;
        return p;
    };
    std::vector<ParetoPoint> pts = {
        mk(18.0, 0.60, true),   // endpoint
        mk(20.0, 0.58, true),   // dominated by the first
        mk(25.0, 0.70, true),   // endpoint
        mk(22.0, 0.65, true),   // interior, non-dominated
        mk(10.0, 0.99, false),  // unsolved: ignored even though it "dominates"
    };
    std::vector<ParetoPoint> kept = pareto_filter(pts);

    CHECK(!pts[0].dominated);
    CHECK(pts[1].dominated);
    CHECK(!pts[2].dominated);
    CHECK(!pts[3].dominated);

    REQUIRE(kept.size() == 3);
    // survivors come back in input order
    CHECK(kept[0].azp == 18.0);
    CHECK(kept[1].azp == 25.0);
    CHECK(kept[2].azp == 22.0);
}
