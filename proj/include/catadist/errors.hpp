#pragma once

#include <stdexcept>
#include <string>

namespace catadist {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or label mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// A matrix or construction would exceed the desk-scale dimension cap.
struct CapExceededError : Error {
    using Error::Error;
};

/// A numeric invariant (PSD, trace class, restoration, ...) failed.
struct InvariantError : Error {
    using Error::Error;
};

/// Lookup of a protocol/code/label key failed.
struct UnknownKeyError : Error {
    using Error::Error;
};

}  // namespace catadist
