#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace typpert {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  size,            // model too small for the requested sites
  empty_sector,    // magnetization sector does not exist
  specification,   // incompatible initial-state / window / filter choice
  capacity,        // dimension above the exact-diagonalization cap
  capability,      // requested preparation not realizable at this size
  propagation,     // Krylov step failed to converge
  bounds,          // spectral bound estimation failed
  empty_window,    // no eigenvalue inside an energy window
  window,          // too few levels in a window
  input,           // malformed or mismatched arguments
  normalization,   // division by a vanishing reference value
  no_relaxation,   // series never settles below the threshold
  fit_failure,     // optimizer did not converge
  undefined,       // quantity undefined for the given parameters
  config,          // run configuration rejected
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::size: return "size";
    case ErrorKind::empty_sector: return "empty_sector";
    case ErrorKind::specification: return "specification";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::capability: return "capability";
    case ErrorKind::propagation: return "propagation";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::empty_window: return "empty_window";
    case ErrorKind::window: return "window";
    case ErrorKind::input: return "input";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::no_relaxation: return "no_relaxation";
    case ErrorKind::fit_failure: return "fit_failure";
    case ErrorKind::undefined: return "undefined";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace typpert
