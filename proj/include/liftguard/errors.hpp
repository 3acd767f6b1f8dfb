#pragma once

#include <stdexcept>
#include <string>

namespace liftguard {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input value (frame, landmark, message payload).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix shapes do not chain.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or option combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or gradient during training.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Geometry too degenerate to define an angle or a scale.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Split requested on a dataset missing one of the classes.
class StratificationError : public Error {
public:
    using Error::Error;
};

/// ROC requested on single-class ground truth.
class UndefinedRocError : public Error {
public:
    using Error::Error;
};

/// Problems with the dataset tree on disk.
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Model file could not be decoded (magic, version, checksum, shape).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Streaming session misuse.
class SessionError : public Error {
public:
    using Error::Error;
};

/// Network endpoint could not be set up.
class ServiceError : public Error {
public:
    using Error::Error;
};

}  // namespace liftguard
