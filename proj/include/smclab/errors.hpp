#pragma once

#include <stdexcept>
#include <string>

namespace smclab {

enum class ErrorKind {
  InvalidInput,
  SingularGain,
  InvalidConfig,
  Divergence,
  InsufficientHistory,
  InvalidComparison,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a state or intermediate stage stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(double t, const std::string& what)
      : Error(ErrorKind::Divergence, what), t_(t) {}

  double time() const noexcept { return t_; }

 private:
  double t_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace smclab
