#pragma once

#include <stdexcept>
#include <string>

namespace lsg {

// Invalid parameters, specs, or configuration (CLI exit code 2).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or mismatched data: bad files, shape mismatches, out-of-range
// indices into datasets (CLI exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : DataError {
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

// Misuse of a stateful API, e.g. backward() twice on the same tape.
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or diverging iterations (CLI exit code 4).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lsg
