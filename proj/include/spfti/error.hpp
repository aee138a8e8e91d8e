#pragma once

#include <stdexcept>
#include <string>

namespace spfti {

enum class ErrorKind {
  invalid_argument,  // rejected input or precondition
  dimension,         // shape or index mismatch
  io,                // missing/unreadable/unwritable file
  config,            // malformed header or configuration
  numerical,         // non-convergence, memory guard
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace spfti
