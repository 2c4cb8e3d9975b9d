#pragma once

#include <stdexcept>
#include <string>

namespace obdet {

// Error taxonomy shared by the C++ core, the C API status codes and the CLI
// exit codes. Everything thrown by the library derives from Error.
enum class ErrorCode {
  InvalidArgument,      // precondition violated by caller-supplied values
  IoError,              // filesystem / stream failure
  FormatError,          // malformed file content (JSON, PGM, PFM, CSV)
  BehindCamera,         // projection of a point at or behind the camera plane
  UnrepresentablePixel, // pixel maps to/behind the virtual image plane horizon
  Internal,             // broken internal invariant
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid_argument(const std::string& msg) {
  throw Error(ErrorCode::InvalidArgument, msg);
}
[[noreturn]] inline void throw_io_error(const std::string& msg) {
  throw Error(ErrorCode::IoError, msg);
}
[[noreturn]] inline void throw_format_error(const std::string& msg) {
  throw Error(ErrorCode::FormatError, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(ErrorCode::Internal, msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw_invalid_argument(msg);
}

}  // namespace obdet
