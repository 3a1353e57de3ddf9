#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voxagg {

enum class ErrorKind {
  invalid_argument,
  non_finite,
  dim_mismatch,
  bad_magic,
  truncated,
  size_mismatch,
  bad_header,
  transport,
  protocol,
  no_gradient,
  singular_system,
  label_mismatch,
  io,
  config,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace voxagg
