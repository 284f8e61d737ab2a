#pragma once

#include <stdexcept>
#include <string>

namespace stratwave {

/// Failure categories. The numeric values double as the C API status codes.
enum class ErrorCode : int {
  ok = 0,
  domain = 1,          // argument outside a declared profile range
  non_monotone = 2,    // Phi_y not strictly monotone on the requested window
  bracket = 3,         // inversion target outside the image of the window
  collapse = 4,        // a layer thickness is not positive
  size = 5,            // grid or field dimensions invalid / mismatched
  trace = 6,           // boundary trace invariant violated
  window = 7,          // vorticity outside the validated Bernoulli-map window
  admissibility = 8,   // perturbation violates the integral constraints
  config = 9,          // malformed or out-of-range input
  solver = 10,         // Newton divergence, eigensolver cap, ...
  wrong_boundary = 11, // boundary does not belong to the layer
  io = 12,
  internal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

const char* to_string(ErrorCode code) noexcept;

}  // namespace stratwave
