#pragma once

#include <stdexcept>
#include <string>

namespace spinone {

// Numeric values are mirrored by s1_status in spinone.h.
enum class ErrorCode : int {
  usage = 1,
  size = 2,
  domain = 3,
  convergence = 4,
  io = 5,
  not_found = 6,
  boundary_peak = 7,
  insufficient_data = 8,
  tolerance = 9,
  internal = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(ErrorCode::convergence, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::size: return "size";
    case ErrorCode::domain: return "domain";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::io: return "io";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::boundary_peak: return "boundary_peak";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::tolerance: return "tolerance";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace spinone
