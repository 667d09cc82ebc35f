#pragma once

#include <stdexcept>
#include <string>

namespace detform {

enum class ErrorCode {
  InvalidArgument = 1,
  GridMismatch,
  Precondition,
  BlowUp,
  NonConvergence,
  UndefinedBound,
  Config,
  Io,
};

// Single exception type for the library; the code lets the C layer map it
// onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by time integrators when a nonfinite coefficient appears.
class BlowUpError : public Error {
 public:
  BlowUpError(double time, const std::string& what)
      : Error(ErrorCode::BlowUp, what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Raised when an iterative solve stops without meeting its tolerance.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(double last_residual, const std::string& what)
      : Error(ErrorCode::NonConvergence, what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detform
