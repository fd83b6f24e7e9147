#pragma once

#include <stdexcept>
#include <string>

namespace mno {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor or state dimensions do not match the operation's contract.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Retained-mode count incompatible with the grid size.
struct ModeError : Error {
    explicit ModeError(const std::string& msg) : Error(msg) {}
};

/// Normal-equation or least-squares system has no unique solution.
struct SingularError : Error {
    explicit SingularError(const std::string& msg) : Error(msg) {}
};

/// Trajectory or training loss left the finite range.
struct BlowUpError : Error {
    explicit BlowUpError(const std::string& msg) : Error(msg) {}
};

/// File could not be read, written, or parsed.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Bad key, value, or flag in a run configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace mno
