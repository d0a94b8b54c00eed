// Error taxonomy shared by the whole toolkit. Each kind maps onto a CLI
// exit code (see tools/), so library code should pick the kind carefully.
#pragma once

#include <stdexcept>
#include <string>

namespace fdnreverb {

enum class ErrorKind {
  range,             // window/index outside the signal
  degenerate_input,  // zero-energy or non-finite signal, metrics undefined
  not_measurable,    // decay never reaches the requested level
  config,            // invalid parameter combination or file content
  numeric_range,     // intermediate value exceeds the floating-point range
  io,                // file open/read/write failure
};

inline const char* error_kind_name(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::range: return "range";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::not_measurable: return "not-measurable";
    case ErrorKind::config: return "config";
    case ErrorKind::numeric_range: return "numeric-range";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class FdnError : public std::runtime_error {
 public:
  FdnError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& msg) {
  throw FdnError(kind, msg);
}

}  // namespace fdnreverb
