#pragma once

#include <stdexcept>
#include <string>

namespace msep {

/// Mismatched vector/matrix shapes or malformed operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-order protocol messages.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File- or stream-level failures (maps to CLI exit code 3).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (maps to CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace msep
