#pragma once

#include <stdexcept>
#include <string>

namespace n2n {

// Error taxonomy mirrors the CLI exit codes:
//   ConfigError -> 1, IoError -> 2, ContractError -> 3, DegenerateBatchError -> 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateBatchError : std::runtime_error {
    explicit DegenerateBatchError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace n2n
