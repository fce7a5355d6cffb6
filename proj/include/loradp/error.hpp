#pragma once

#include <stdexcept>
#include <string>

namespace loradp {

// All recoverable failures (bad input, violated preconditions, non-convergence)
// are thrown as Error; the CLI maps them to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace loradp
