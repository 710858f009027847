#ifndef CARLEMAN_LAB_ERROR_HPP
#define CARLEMAN_LAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace carleman_lab {

/// Error categories surfaced to callers and mapped to CLI exit codes.
enum class ErrorKind {
  invalid_argument,  ///< bad parameters or configuration
  precondition,      ///< a hypothesis of the operation does not hold
  overflow,          ///< weight evaluation left the representable range
  instability,       ///< explicit scheme produced non-finite values
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::instability: return "instability";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what),
        kind_(kind),
        where_(std::move(where)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Field path or operation name the error refers to (e.g. "weights.beta").
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

/// Raised by the wave solver; carries the first time level with a non-finite value.
class InstabilityError : public Error {
 public:
  InstabilityError(std::size_t level, const std::string& what)
      : Error(ErrorKind::instability, "wave_solver.solve", what), level_(level) {}
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_ERROR_HPP
