#pragma once

#include <stdexcept>
#include <string>

namespace widfs {

// Two failure classes, mirrored by the CLI exit codes:
//   InputError        -> exit 2  (malformed files, bad arguments, unreadable paths)
//   PreconditionError -> exit 3  (violated operation preconditions, degenerate data)
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace widfs
