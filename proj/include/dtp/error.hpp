#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtp {

enum class ErrorKind {
  Length,              // trajectory shorter than the requested horizon
  Criterion,           // discount outside [0, 1)
  ImpossibleObservation,
  CompositionOrder,    // non-commutative events without an explicit order
  MalformedTree,
  Size,                // grounding cap exceeded
  UnsupportedStructure,
  Closure,             // projection onto a set that is not relevance-closed
  Stability,           // quotient over an unstable partition
  Leakage,             // restriction to a set that is not closed
  Argument,
  Numeric,
  Parse,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dtp
