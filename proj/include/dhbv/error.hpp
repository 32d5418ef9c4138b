#pragma once

#include <stdexcept>
#include <string>

namespace dhbv {

/// Bad configuration or usage (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data failed validation (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: domain violation, non-finite value, NaN loss (CLI exit code 3).
class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dhbv
