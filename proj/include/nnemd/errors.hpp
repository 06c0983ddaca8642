#pragma once

#include <stdexcept>
#include <string>

namespace nnemd {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A value does not fit the configured fixed-point bound.
class BoundExceeded : public Error {
public:
    explicit BoundExceeded(const std::string& what) : Error(what) {}
};

/// The discrete-log solver found no exponent within its bound. Usually
/// means an encoding bound was mis-sized upstream.
class NotInRange : public Error {
public:
    explicit NotInRange(const std::string& what) : Error(what) {}
};

/// The key authority refused a functional-key request.
class FilterRejected : public Error {
public:
    explicit FilterRejected(const std::string& what) : Error(what) {}
};

/// Shape/meta validation failure inside a secure computation protocol.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

class NetError : public Error {
public:
    explicit NetError(const std::string& what) : Error(what) {}
};

}  // namespace nnemd
