#pragma once

#include <stdexcept>
#include <string>

namespace vmflow {

enum class ErrorCode {
  kShapeMismatch,
  kInvalidArgument,
  kNonFinite,
  kUnsupported,
  kDegenerate,
  kIo,
  kFormat,
  kConfig,
  kUnknownVariant,
};

const char* to_string(ErrorCode code);

// Every failure in the library is reported through this type. `what()` is a
// human-readable message; `code()` lets callers (the CLI in particular) map
// failures onto exit codes without parsing strings.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vmflow
