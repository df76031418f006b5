#include "l2c/error.hpp"

namespace l2c {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Encoding: return "encoding error";
    case ErrorKind::Contract: return "contract violation";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Bridge: return "bridge error";
    case ErrorKind::Protocol: return "protocol error";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::Metric: return "metric undefined";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return 2;
    case ErrorKind::Schema:
    case ErrorKind::Encoding: return 3;
    case ErrorKind::Bridge:
    case ErrorKind::Protocol:
    case ErrorKind::Timeout: return 4;
    case ErrorKind::Metric: return 5;
    case ErrorKind::Config: return 64;
    case ErrorKind::Io: return 66;
    case ErrorKind::Contract: return 70;
  }
  return 1;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace l2c
