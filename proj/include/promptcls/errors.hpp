#pragma once

#include <stdexcept>
#include <string>

namespace promptcls {

// Error taxonomy mirrors the CLI exit codes: usage (1), data (2), training (3).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace promptcls
