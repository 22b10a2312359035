#ifndef KPLS_ERRORS_HPP
#define KPLS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kpls {

// Malformed or inconsistent input data (CSV parse errors, shape mismatches
// in user-supplied files). CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-convergence, undefined quantity). CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kpls

#endif
