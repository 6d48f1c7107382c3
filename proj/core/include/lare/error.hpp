#pragma once

#include <stdexcept>
#include <string>

namespace lare {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorKind {
  Usage = 2,    // bad flags, invalid config, contract violations caught up front
  Numeric = 3,  // factorization failures, non-finite values
  Io = 4,       // missing/corrupt files, malformed formats
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(std::string message) {
  throw Error(ErrorKind::Usage, std::move(message));
}
[[noreturn]] inline void fail_numeric(std::string message) {
  throw Error(ErrorKind::Numeric, std::move(message));
}
[[noreturn]] inline void fail_io(std::string message) {
  throw Error(ErrorKind::Io, std::move(message));
}

}  // namespace lare
