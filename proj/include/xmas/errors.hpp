#ifndef XMAS_ERRORS_HPP
#define XMAS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xmas {

// Shape / grid mismatches between volumes and fields.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration value (bad grid divisibility, patch too large, ...).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A required upstream artifact (checkpoint, dataset) is missing.
struct DependencyError : std::runtime_error {
    explicit DependencyError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered where finite arithmetic is required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Triplet sampling could not satisfy its constraints within the retry budget.
struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

// File I/O failures, split by cause so callers can tell them apart.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};
struct MalformedHeaderError : IoError {
    explicit MalformedHeaderError(const std::string& what) : IoError(what) {}
};
struct TruncatedFileError : IoError {
    explicit TruncatedFileError(const std::string& what) : IoError(what) {}
};
struct ChecksumError : IoError {
    explicit ChecksumError(const std::string& what) : IoError(what) {}
};

} // namespace xmas

#endif
