#pragma once

#include <stdexcept>
#include <string>

namespace dprn {

/// Violated precondition: wrong dimensions, invalid arguments, stale caches.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed external data: bad magic, unsupported header, truncated payload.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values produced during numerical evaluation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Network shape does not admit the requested structural transform
/// (expand/compact of the dual-pathway form).
struct StructureError : ContractError {
    using ContractError::ContractError;
};

/// Patch aggregation left pixels with zero total weight and no fallback.
struct CoverageError : ContractError {
    using ContractError::ContractError;
};

}  // namespace dprn
