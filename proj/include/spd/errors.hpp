#ifndef SPD_ERRORS_HPP
#define SPD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spd {

// Bad user-supplied data or parameters (CLI exit code 2).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric routine failed to converge or produced no usable result (exit code 3).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File could not be read or written (exit code 4).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace spd

#endif
