#pragma once

#include <stdexcept>
#include <string>

namespace flcc {

/// Bad argument or violated precondition (CLI exit code 4).
struct InvalidParameter : std::runtime_error {
    explicit InvalidParameter(const std::string& msg) : std::runtime_error(msg) {}
};

/// Config file problems: unknown key, type mismatch, invariant violation (exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dataset / input file problems: bad magic, truncation, missing run dirs (exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values where finite ones are required (exit code 4).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flcc
