#pragma once

#include <stdexcept>
#include <string>

namespace pairre {

// Error taxonomy shared by the library, the C API and the CLI exit codes.
enum class Status {
  Ok = 0,
  Usage = 1,     // bad arguments / misuse of an interface
  Data = 2,      // malformed or inconsistent input data
  Numeric = 3,   // non-finite values or numerical breakdown
  Io = 4,        // filesystem failures
  Internal = 5,  // bugs; should not be reachable
};

class Error : public std::runtime_error {
 public:
  Error(Status code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  Status code() const { return code_; }

 private:
  Status code_;
};

[[noreturn]] inline void fail(Status code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace pairre
