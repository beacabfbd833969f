#pragma once

#include <stdexcept>
#include <string>

namespace tatum {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension or length mismatch between arguments.
struct DimensionError : Error {
    using Error::Error;
};

/// A covariance (or a block that must be inverted) is singular or not
/// positive definite at the working tolerance.
struct SingularError : Error {
    using Error::Error;
};

/// A potential that must be normalizable is not (precision not PD).
struct ImproperError : Error {
    using Error::Error;
};

/// Unknown label, duplicate label, or a label set that is not a subset
/// of a potential's domain.
struct LabelError : Error {
    using Error::Error;
};

/// A score location that no subdivision schema (or prior table lattice)
/// can represent.
struct OffGridError : Error {
    using Error::Error;
};

/// Every candidate extension or block assignment has probability zero.
struct InfeasibleError : Error {
    using Error::Error;
};

/// Malformed input file.
struct FormatError : Error {
    using Error::Error;
};

/// Bad configuration value or unknown configuration key.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace tatum
