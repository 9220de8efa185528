#pragma once

#include <stdexcept>
#include <string>

namespace ope {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or size mismatch between tensors, layers or batches.
class DimensionError : public Error {
public:
    using Error::Error;
    DimensionError(const std::string& what_failed, std::size_t expected, std::size_t actual)
        : Error(what_failed + ": expected " + std::to_string(expected) +
                ", got " + std::to_string(actual)) {}
};

/// Invalid run configuration (bad values, unknown keys, missing files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV parsing, dataset construction, subsampling).
class DataError : public Error {
public:
    using Error::Error;
};

/// Checkpoint / manifest file does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite value where a finite one is required (losses, gradients).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace ope
