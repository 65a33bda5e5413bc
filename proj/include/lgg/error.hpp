#pragma once

#include <stdexcept>
#include <string>

namespace lgg {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unsupported on-disk data (npy headers, CSV, JSON schemas).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(what) {}
};

/// Well-formed input whose content violates a contract (NaN, N mismatch, bad labels).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
};

/// Invalid knob values (k = 0, alpha <= 0, gamma <= 0, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace lgg
