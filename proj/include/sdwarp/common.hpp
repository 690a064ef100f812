#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdwarp {

// Error taxonomy used across the library. CLI maps argument/config/format
// errors to exit code 1 and anything else to 2.
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

inline constexpr const char* kVersionString = "sdwarp-0.1.0";

}  // namespace sdwarp
