#pragma once

#include <stdexcept>
#include <string>

namespace nlreg {

// Base class for all input/contract violations raised by this library.
// Numeric trouble inside solvers is reported through result flags instead;
// exceptions are reserved for malformed expressions, data, or API misuse.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse failure with a byte offset into the source text.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " (at offset " + std::to_string(position) + ")"),
          pos(position) {}
    std::size_t pos;
};

// Raised when a model transformation cannot be applied (e.g. no invertible
// path to a parameter, or differentiation through abs).
struct ModelError : Error {
    using Error::Error;
};

}  // namespace nlreg
