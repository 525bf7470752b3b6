// SPDX-License-Identifier: MIT
//
// Compares the OpenMP-parallel extended-period solve against the serial
// reference implementation and checks that the results are bitwise equal.
//
//   wdn-bench <network.inp> [repetitions]

#include <chrono>
#include <cstring>
#include <iostream>

#include "wdn/hydraulics.hpp"

using namespace wdn;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: wdn-bench <network.inp> [repetitions]\n";
        return 2;
    }
    const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

    ParsedNetwork parsed = parse_network_file(argv[1]);
    parsed.scenario.bounds = derive_bounds(parsed.model, parsed.scenario.demands,
                                           parsed.scenario.source_heads, {});
    fit_all_quadratics(parsed.model, parsed.scenario.bounds);
    NetworkSolver solver(parsed.model);
    ControlSettings zero =
        ControlSettings::zeros(parsed.scenario.n_t, parsed.model.np(), parsed.model.nn());

    auto time = [&](auto&& fn) {
        double best = 1e100;
        for (int r = 0; r < reps; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            fn();
            auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        return best;
    };

    HydraulicState parallel, serial;
    double t_par = time([&] {
        parallel = solver.solve_eps(parsed.scenario, zero, HeadLossModel::HW);
    });
    double t_ser = time([&] {
        serial = solver.solve_eps_serial(parsed.scenario, zero, HeadLossModel::HW);
    });

    bool identical = parallel.q.rows() == serial.q.rows() &&
                     std::memcmp(parallel.q.data(), serial.q.data(),
                                 sizeof(double) * parallel.q.size()) == 0 &&
                     std::memcmp(parallel.h.data(), serial.h.data(),
                                 sizeof(double) * parallel.h.size()) == 0;

    std::cout << "steps:            " << parsed.scenario.n_t << "\n"
              << "parallel solve:   " << t_par << " ms (best of " << reps << ")\n"
              << "serial reference: " << t_ser << " ms\n"
              << "speedup:          " << t_ser / t_par << "x\n"
              << "bitwise equal:    " << (identical ? "yes" : "NO") << "\n";
    return identical ? 0 : 1;
}
