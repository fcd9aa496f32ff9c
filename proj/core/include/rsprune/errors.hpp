#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsprune {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,       // bad or contradictory configuration
  parse,        // malformed text input
  validation,   // well-formed input that violates an invariant
  format,       // binary magic/version mismatch
  corruption,   // binary payload inconsistent with its header
  alignment,    // ids sidecar does not line up with matrix rows
  degenerate,   // degenerate data (empty raster, zero embedding, ...)
  precondition, // caller broke a documented precondition
  io,
  infeasible,   // requested budget cannot be met by the stage-I output
  join,         // survivor ids missing from the embedding file
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

std::string_view to_string(ErrorKind kind) noexcept;

// 2 config, 3 data/format, 4 infeasible budget.
int exit_code_for(ErrorKind kind) noexcept;

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace rsprune
