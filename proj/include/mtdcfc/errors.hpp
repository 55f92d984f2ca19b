#pragma once

#include <stdexcept>
#include <string>

namespace mtdcfc {

/// Raised for malformed or inconsistent configuration. `path` names the
/// offending field (e.g. "mtdc.nodes[2].cap").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised when a numerical procedure cannot produce a meaningful result
/// (singular system, eigen solver failure, diverging integration).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Integration abort carrying the simulation time at which it happened.
class IntegrationAbort : public NumericalError {
 public:
  IntegrationAbort(double time, const std::string& what)
      : NumericalError("t = " + std::to_string(time) + " s: " + what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace mtdcfc
