#pragma once

#include <stdexcept>
#include <string>

namespace midl {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Iterative algorithm exceeded its sweep/proposal budget.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// Invalid parameter or violated precondition.
class ValueError : public Error {
public:
    explicit ValueError(const std::string& msg) : Error(msg) {}
};

// Correlation undefined (zero-variance input).
class CorrelationError : public Error {
public:
    explicit CorrelationError(const std::string& msg) : Error(msg) {}
};

// Config file rejected; message carries file/key context.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File I/O failure or malformed on-disk data.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace midl
