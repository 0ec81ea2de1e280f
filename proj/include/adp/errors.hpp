#pragma once

#include <stdexcept>
#include <string>

namespace adp {

/// Invalid user-supplied data: dimension mismatches, malformed files,
/// out-of-range parameters. Maps to exit code 1 in the CLI.
class InvalidInputError : public std::runtime_error {
public:
    explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A sample set whose feature submatrix is rank-deficient. Never silently
/// regularized; callers either fix the sample set or abort.
class RankDeficiencyError : public InvalidInputError {
public:
    explicit RankDeficiencyError(const std::string& msg) : InvalidInputError(msg) {}
};

/// Numerical failure inside a solver (non-finite values, residual too large).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The gradient-descent inner loop produced a non-finite iterate. Carries the
/// inner-iteration index at which the blow-up was detected.
class GradientDivergenceError : public NumericalError {
public:
    GradientDivergenceError(const std::string& msg, int iteration)
        : NumericalError(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// Internal invariant violation: indicates a bug, not bad input.
/// Maps to exit code 2 in the CLI.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace adp
