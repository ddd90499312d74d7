#pragma once

#include <stdexcept>
#include <string>

namespace droplet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SchemaMismatchError : public Error {
public:
    using Error::Error;
};

class InvalidKError : public Error {
public:
    using Error::Error;
};

class DegenerateRegionError : public Error {
public:
    using Error::Error;
};

class InvalidCountMaxError : public Error {
public:
    using Error::Error;
};

class BadImageError : public Error {
public:
    using Error::Error;
};

class SingularKernelError : public Error {
public:
    using Error::Error;
};

class InsufficientCandidatesError : public Error {
public:
    using Error::Error;
};

class NonPositiveInputError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public Error {
public:
    using Error::Error;
};

// Deadline passed with suggestion images still absent.
class MissingImageError : public TimeoutError {
public:
    using TimeoutError::TimeoutError;
};

class DeviceFailureError : public Error {
public:
    using Error::Error;
};

class VisionFailureError : public Error {
public:
    using Error::Error;
};

class EmptyExperimentError : public Error {
public:
    using Error::Error;
};

class EmptyScopeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace droplet
