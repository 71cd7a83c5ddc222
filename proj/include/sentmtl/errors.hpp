#ifndef SENTMTL_ERRORS_HPP
#define SENTMTL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sentmtl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened or read.
class IoError : public Error {
public:
    using Error::Error;
};

/// A delimited file does not have the shape the column mapping promises.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A single data row is malformed; the message carries the 1-based row number.
class RowError : public Error {
public:
    using Error::Error;
};

/// A numeric argument is outside its documented domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Matrix or batch dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (bad field, duplicate task key,
/// scenario/pool mismatch, unknown scenario name).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A label required for stratification has zero instances.
class StratificationError : public Error {
public:
    using Error::Error;
};

/// The pretrained encoder asset could not be resolved or loaded.
class AssetError : public Error {
public:
    using Error::Error;
};

/// An operation was called in a state that cannot serve it
/// (empty history, missing checkpoint, ...).
class StateError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss; message names step and task.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Every pool a sampler could draw from is empty.
class ExhaustionError : public Error {
public:
    using Error::Error;
};

}  // namespace sentmtl

#endif  // SENTMTL_ERRORS_HPP
