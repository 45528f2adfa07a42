#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace w4a16 {

// Base for all library errors so callers can catch one type at the CLI boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension / alignment / plan violations.
struct ShapeError : Error {
    using Error::Error;
};

// Value-domain violations (non-finite input, non-positive scale, code out of range).
struct DomainError : Error {
    using Error::Error;
};

// Malformed file contents; carries the byte offset where parsing failed.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

}  // namespace w4a16
