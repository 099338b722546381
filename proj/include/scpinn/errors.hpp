#pragma once

#include <stdexcept>
#include <string>

namespace scpinn {

/// Bad user input: malformed config, unknown problem name, out-of-range
/// coefficient. Maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A file failed validation (magic line, hash, length, truncation).
/// Maps to process exit code 3.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or divergence detected mid-computation.
/// Maps to process exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scpinn
