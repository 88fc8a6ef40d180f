#pragma once

#include <stdexcept>
#include <string>

namespace spherefit {

enum class ErrorKind {
  InvalidArgument,
  InvalidRegion,
  DimensionMismatch,
  DegenerateConfiguration,
  InsufficientData,
  DegenerateData,
  Numeric,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spherefit
