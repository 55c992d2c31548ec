#pragma once

#include <stdexcept>
#include <string>

namespace xgbm {

// Invalid construction or precondition violation in user-supplied data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical routine failed to meet its accuracy contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AccuracyError : public NumericalError {
public:
    AccuracyError(const std::string& what, double best_estimate)
        : NumericalError(what), best_estimate_(best_estimate) {}
    [[nodiscard]] double best_estimate() const noexcept { return best_estimate_; }

private:
    double best_estimate_;
};

}  // namespace xgbm
