#pragma once

#include <stdexcept>
#include <string>

namespace gridtopo {

/// Failure categories surfaced to the CLI as the message prefix.
enum class ErrorKind {
  Parse,
  Validation,
  Instability,
  Overflow,
  Io,
  Estimation,
  Spectral,
  Config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gridtopo
