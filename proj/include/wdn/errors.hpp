// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace wdn {

/// Malformed input file or section.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally valid input that violates a model invariant
/// (dangling reference, nonpositive dimension, disconnected graph, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Newton (or SCP) iteration failed to reach tolerance.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double energy, double mass)
        : std::runtime_error(msg), residual_energy(energy), residual_mass(mass) {}
    double residual_energy = 0.0;
    double residual_mass = 0.0;
};

/// No feasible point exists for the requested constraint set.
struct InfeasibleError : std::runtime_error {
    InfeasibleError(const std::string& msg, std::string constraint = {})
        : std::runtime_error(msg), most_violated(std::move(constraint)) {}
    std::string most_violated;
};

} // namespace wdn
