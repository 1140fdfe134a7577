#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace neoface {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Coordinates outside the frame they are bound to.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (not valid JSON, wrong top-level shape).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates the annotation schema. Carries one entry
/// per offending record so callers can print them all at once.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Run configuration that references unknown backends, methods, or values.
class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    enum class Kind { Unavailable, UnknownImage, Timeout, Protocol, Plugin };

    BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Raised by augmentation when the face box leaves the frame entirely.
class SampleRejected : public Error {
public:
    using Error::Error;
};

/// Raised when a statistic has no information to work with (e.g. all paired
/// differences are zero).
class NoInformationError : public Error {
public:
    using Error::Error;
};

}  // namespace neoface
