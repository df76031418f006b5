#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace l2c {

/// Error categories surfaced by the library. Each maps to a distinct CLI exit status.
enum class ErrorKind {
  Parse,     // malformed input text
  Schema,    // well-formed input that violates the declared schema
  Encoding,  // unknown categorical label
  Contract,  // caller broke a documented precondition
  Config,    // invalid configuration value
  Io,        // file could not be opened or written
  Bridge,    // external model host failed
  Protocol,  // external model host spoke the protocol incorrectly
  Timeout,   // external model host did not answer in time
  Metric,    // metric undefined for the given input
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit status for an error kind (parse=2, schema=3, bridge=4, metric=5, usage=64).
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::Contract, message);
}

}  // namespace l2c
