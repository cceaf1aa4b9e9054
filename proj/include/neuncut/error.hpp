#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neuncut {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parameter or configuration value is out of its documented range.
struct InvalidConfig : Error {
    using Error::Error;
};

/// An argument (shape, label range, file handle) violates a precondition.
struct InvalidInput : Error {
    using Error::Error;
};

/// Input data contains non-finite or otherwise unusable values.
struct InvalidData : Error {
    using Error::Error;
};

/// A computation produced non-finite values or failed to converge.
struct NumericalError : Error {
    using Error::Error;
};

/// A text file could not be parsed; carries the 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    std::size_t line;
};

/// A hyper-parameter search finished without an admissible candidate.
struct SearchFailed : Error {
    using Error::Error;
};

} // namespace neuncut
