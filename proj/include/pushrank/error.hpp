#ifndef PUSHRANK_ERROR_HPP
#define PUSHRANK_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace pushrank {

/// Library-wide error type. The message carries the offending id/coordinate
/// so callers can report without extra bookkeeping.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when gradient descent blows up; carries the loss trace up to the
/// failure point.
struct DivergenceError : Error {
  std::vector<double> loss_trace;
  DivergenceError(const std::string& msg, std::vector<double> trace)
      : Error(msg), loss_trace(std::move(trace)) {}
};

}  // namespace pushrank

#endif
