#pragma once

#include <stdexcept>
#include <string>

namespace dbmatch {

/// Raised for invalid user-supplied configuration (malformed degree law,
/// out-of-range probability, unknown preset, ...). The CLI maps it to exit 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a closed-form evaluator is called outside its domain.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace dbmatch
