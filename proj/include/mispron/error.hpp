#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mispron {

// Coarse failure families; the CLI maps these onto process exit codes.
enum class ErrorKind {
  io,        // unreadable/unwritable files
  format,    // parseable but wrong shape/codec/schema
  data,      // semantically invalid inputs (empty corpus, silent clip, ...)
  param,     // caller passed an out-of-contract parameter
  training,  // a fit procedure could not produce a model
  version,   // persisted artifact from an incompatible format version
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        kind_(kind),
        code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Stable machine-readable identifier, e.g. "all_silent" or "decode_error".
  const std::string& code() const noexcept { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& code,
                               const std::string& message) {
  throw Error(kind, code, message);
}

}  // namespace mispron
