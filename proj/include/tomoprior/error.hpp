#pragma once

#include <stdexcept>
#include <string>

namespace tomoprior {

/// Raised when an argument violates an operation's precondition (bad shape,
/// non-finite values, inconsistent geometry).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for unreadable, malformed or unwritable data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tomoprior
