#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfe {

/// Invalid geometry, parameters or inputs that do not match each other.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line number.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, int line)
        : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Non-finite values or overflow in a numerical evaluation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iteration ran out of budget. `trace` holds the per-iteration merit values.
class NoConvergence : public std::runtime_error {
public:
    NoConvergence(const std::string& what, std::vector<double> trace = {})
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// A closed loop passes too close to the point it winds around.
class DegenerateLoop : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Broken algorithmic guarantee (should never happen).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mfe
