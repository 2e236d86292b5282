#pragma once

#include <stdexcept>
#include <string>

namespace spikemark {

enum class ErrorKind {
  InputDomain,       // value outside its documented domain
  Shape,             // dimension mismatch between operands
  Numeric,           // non-finite value where finiteness is required
  TrainingDivergence,
  InsufficientCandidates,
  EmbeddingFailure,
  UnsupportedArchitecture,
  OutOfRange,
  Format,            // bad magic / version in a file
  Length,            // truncated file
  Consistency,       // two inputs disagree (e.g. image/label counts)
  Precondition,
  InvariantViolation,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace spikemark
