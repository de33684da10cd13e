#pragma once

#include <stdexcept>
#include <string>

namespace nhawkes {

/// Invalid inputs: malformed parameters, configuration, or file contents.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a meaningful number (singular spectral
/// matrix, every optimizer restart failed, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nhawkes
