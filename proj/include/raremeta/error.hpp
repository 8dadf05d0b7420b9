#pragma once

#include <stdexcept>
#include <string>

namespace raremeta {

enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  dimension_mismatch = 3,
  sampler_failure = 4,
  io = 5,
};

// Every failure raised by the library carries one of the codes above so the
// C layer can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace raremeta
