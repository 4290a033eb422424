#pragma once

#include <stdexcept>
#include <string>

namespace sentifuse {

/// Bad input data, configuration, or arguments. The CLI maps this family
/// to exit code 2; everything else derived from std::exception exits 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally malformed file contents (wrong header, missing key).
class FormatError : public ValidationError {
public:
    explicit FormatError(const std::string& msg) : ValidationError(msg) {}
};

/// A field that should be a number or date but is not.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

/// API misuse between components: mismatched shapes, stale caches,
/// a scaler applied to the wrong frame. Exit code 3 at the CLI.
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failure inside a training run (non-finite gradients and the like).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sentifuse
