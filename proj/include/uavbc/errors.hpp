#pragma once

#include <stdexcept>
#include <string>

namespace uavbc {

// Every error carries a short machine-parseable class name; the CLI prints it
// as the first token of its single diagnostic line.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& what)
      : std::runtime_error(what), class_(std::move(error_class)) {}
  const std::string& error_class() const noexcept { return class_; }

 private:
  std::string class_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error("parameter_error", what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage_error", what) {}
};

class InfeasibleLinkError : public Error {
 public:
  explicit InfeasibleLinkError(const std::string& what) : Error("infeasible_link", what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training_error", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

}  // namespace uavbc
