#pragma once

#include <stdexcept>
#include <string>

namespace wlrbg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameters or options.
struct ConfigError : Error {
    using Error::Error;
};

// Unreadable, malformed or inconsistent input data.
struct DataError : Error {
    using Error::Error;
};

// Numerical failure inside a solver (e.g. SVD non-convergence).
struct SolverError : Error {
    using Error::Error;
};

}  // namespace wlrbg
