#pragma once

#include <stdexcept>
#include <string>

namespace gfm {

// Invalid parameters or scenario content. The CLI maps it to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical domain problems: singular matrices, no real root, degenerate
// oscillators, solver failures.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Controller cannot produce an output (e.g. v_dc at zero).
struct ControllerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integration produced a non-finite state.
struct DivergenceError : std::runtime_error {
    double last_valid_time;
    DivergenceError(const std::string& what, double t)
        : std::runtime_error(what), last_valid_time(t) {}
};

// Malformed config text. The CLI maps it to exit code 2.
struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& what, int l, int c) : std::runtime_error(what), line(l), column(c) {}
};

}  // namespace gfm
