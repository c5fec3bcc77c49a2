#pragma once

#include <stdexcept>
#include <string>

namespace como {

enum class ErrorKind { config, data, degenerate, stage, io, internal };

/// Base for every failure the library reports; the C API maps `kind()` onto
/// its status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class StageError : public Error {
public:
    explicit StageError(const std::string& what) : Error(ErrorKind::stage, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace como
