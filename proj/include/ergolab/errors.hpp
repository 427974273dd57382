#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ergolab {

/// Input or precondition violation: the computation was never started.
/// CLI maps this to exit code 2.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Subadditivity (or generalized subadditivity) failed at a sampled pair.
/// Carries the witness so callers can report it.
class SubadditivityViolation : public StructuralError {
public:
    SubadditivityViolation(int m, int n, double lhs, double rhs, const std::string& what)
        : StructuralError(what), m(m), n(n), lhs(lhs), rhs(rhs) {}
    int m;
    int n;
    double lhs;
    double rhs;
};

/// ODE integration could not continue (step-size underflow, step budget).
/// Carries the last good time and state. CLI maps this to exit code 3.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(double last_good_time, std::vector<double> last_state, const std::string& what)
        : std::runtime_error(what), last_good_time(last_good_time), last_state(std::move(last_state)) {}
    double last_good_time;
    std::vector<double> last_state;
};

} // namespace ergolab
