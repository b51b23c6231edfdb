#pragma once

#include <stdexcept>

namespace occlurend {

// Numeric failure (non-finite values, solver non-convergence); the CLI maps
// this to exit code 3, while configuration/input problems exit with 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace occlurend
