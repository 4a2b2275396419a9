// Error taxonomy shared by every module; the C boundary maps codes to ints.
#pragma once

#include <stdexcept>
#include <string>

namespace noisebench {

enum class ErrorCode {
  Io = 1,
  Format = 2,
  Parse = 3,
  EmptyData = 4,
  Invariant = 5,
  Config = 6,
  Input = 7,
  Manifest = 8,
  Internal = 9,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Format: return "FormatError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::EmptyData: return "EmptyDataError";
    case ErrorCode::Invariant: return "InvariantError";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Input: return "InputError";
    case ErrorCode::Manifest: return "ManifestError";
    case ErrorCode::Internal: return "InternalError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace noisebench
