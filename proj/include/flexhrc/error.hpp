#pragma once

#include <stdexcept>
#include <string>

namespace flexhrc {

enum class ErrorKind {
  parse,
  dangling_reference,
  cyclic_graph,
  duplicate_action_set,
  invalid_argument,
  unknown_id,
  deadlock,
  cooperation_failed,
  dimension_mismatch,
  numerical,
  not_converged,
  invalid_state,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::dangling_reference: return "dangling reference";
    case ErrorKind::cyclic_graph: return "cyclic graph";
    case ErrorKind::duplicate_action_set: return "duplicate action set";
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::unknown_id: return "unknown id";
    case ErrorKind::deadlock: return "deadlock";
    case ErrorKind::cooperation_failed: return "cooperation failed";
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::not_converged: return "not converged";
    case ErrorKind::invalid_state: return "invalid state";
  }
  return "error";
}

}  // namespace flexhrc
