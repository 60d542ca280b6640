#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wham {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Code lengths, weight tables or vector dimensions that do not line up.
struct DimensionError : Error {
    using Error::Error;
};

struct InvalidWeightError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct UnsupportedLengthError : ArgumentError {
    using ArgumentError::ArgumentError;
};

// Malformed or truncated input. `offset` is the byte position where reading failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace wham
