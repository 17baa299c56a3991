#pragma once

#include <stdexcept>
#include <string>

namespace posim {

// Thrown when a training or analysis step produces non-finite values.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a pipeline stage cannot find (or refuses to mix) an upstream
// artifact. The message names the offending path.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for malformed or unsatisfiable experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace posim
