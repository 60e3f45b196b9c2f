#pragma once

#include <stdexcept>
#include <string>

namespace trustguard {

enum class ErrorKind {
  Config,     // invalid configuration or task specification
  Data,       // malformed input, mapping failures, empty inputs
  Dimension,  // tensor shape mismatch
  Numeric,    // non-finite loss or gradients
  State,      // API misuse (missing gradients, rank errors)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace trustguard
