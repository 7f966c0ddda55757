#pragma once

#include <stdexcept>
#include <string>

namespace kaplab {

/// A standing hypothesis of the instability theorems failed on the data
/// (parabolicity, sign of the principal eigenfunction, declared norms...).
/// Runs report these as verdicts rather than operational errors.
class HypothesisViolation : public std::runtime_error {
public:
    explicit HypothesisViolation(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative method ran out of budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace detail
}  // namespace kaplab
