#pragma once

#include <stdexcept>
#include <string>

namespace hycoqa {

/// A point left the open unit ball, or a value is outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs disagree on a dimension (vector lengths, matrix shapes, store width).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file does not follow its declared layout (bad magic, truncation, schema).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hycoqa
