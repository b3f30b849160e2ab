#pragma once

#include <stdexcept>
#include <string>

namespace devgeo {

// Fatal corpus problems (missing manifest, unreadable directory).
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PageUnparseable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuerySkipped : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by search backends for a single failed attempt.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AugmentationUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeocodeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stage could not complete; carries the stage name for the exit message.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace devgeo
