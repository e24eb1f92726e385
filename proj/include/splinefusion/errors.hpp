#pragma once

#include <stdexcept>
#include <string>

namespace splinefusion {

// Error categories mirrored by the CLI exit codes:
// ConfigError -> 2, DataError -> 3, NumericalError -> 4.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace splinefusion
