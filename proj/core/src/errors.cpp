#include "rsprune/errors.hpp"

namespace rsprune {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::format: return "format";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::degenerate: return "degenerate-input";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::io: return "io";
    case ErrorKind::infeasible: return "infeasible-budget";
    case ErrorKind::join: return "join";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::infeasible: return 4;
    default: return 3;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace rsprune
