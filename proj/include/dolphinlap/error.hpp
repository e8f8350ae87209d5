#pragma once

#include <stdexcept>
#include <string>

namespace dolphinlap {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or missing input: files, columns, config keys.
class InputError : public Error {
   public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// A numerical precondition failed (too few samples, singular system, ...).
class AnalysisError : public Error {
   public:
    explicit AnalysisError(const std::string& msg) : Error(msg) {}
};

}  // namespace dolphinlap
