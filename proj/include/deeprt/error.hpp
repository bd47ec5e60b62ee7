#pragma once

#include <stdexcept>
#include <string>

namespace deeprt {

enum class ErrorKind {
  UnknownCategory,
  BatchTooLarge,
  DuplicateCategory,
  DuplicateRequest,
  ParseError,
  MonotonicityViolation,
  EmptyCategory,
  DegenerateDeadline,
  NotIdle,
  EmptyQueue,
  WorkerBusy,
  UnsortedInput,
  InvalidConfig,
};

const char* to_string(ErrorKind kind);

// Single exception type for all scheduler-domain failures. The kind is kept
// machine-readable so tests and the CLI can branch on it without string
// matching.
class SchedError : public std::runtime_error {
 public:
  SchedError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace deeprt
