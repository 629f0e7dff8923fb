#pragma once

#include <stdexcept>
#include <string>

namespace ebm {

// Bad user input: parameters, geometry, config keys.
struct InvalidParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Special-function, quadrature, linear-algebra or integrator failure.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A referenced object (solution id, file) could not be resolved.
struct ReferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ebm
