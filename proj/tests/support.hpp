// SPDX-License-Identifier: MIT
#pragma once

#include <memory>
#include <string>
#include <utility>

#include "wdn/hydraulics.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
    return std::string(WDN_DATA_DIR) + "/" + name;
}

/// Parsed network plus the scenario with bounds derived and QA coefficients
/// fitted. Heap-allocated because NetworkSolver keeps a pointer into the
/// model, so the loaded network must not move once a solver exists.
struct Net {
    wdn::NetworkModel model;
    wdn::Scenario scenario;
};

inline std::unique_ptr<Net> load(const std::string& name, wdn::BoundsOptions bopt = {}) {
    auto net = std::make_unique<Net>();
    wdn::ParsedNetwork parsed = wdn::parse_network_file(data_path(name));
    net->model = std::move(parsed.model);
    net->scenario = std::move(parsed.scenario);
    net->scenario.bounds =
        wdn::derive_bounds(net->model, net->scenario.demands, net->scenario.source_heads, bopt);
    wdn::fit_all_quadratics(net->model, net->scenario.bounds);
    return net;
}

} // namespace testutil
