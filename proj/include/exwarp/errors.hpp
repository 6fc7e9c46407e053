#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace exwarp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spec or config value violates its declared invariants. Carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PoisonedNetworkError : public Error {
 public:
  using Error::Error;
};

class SchedulerError : public Error {
 public:
  using Error::Error;
};

}  // namespace exwarp
