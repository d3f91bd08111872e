#pragma once

#include <stdexcept>
#include <string>

namespace jumpwave {

// Validation of user-facing inputs (configs, geometry). Maps to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failures (non-convergence, overflow). Maps to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace jumpwave
