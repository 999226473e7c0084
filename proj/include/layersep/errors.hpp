#pragma once

#include <stdexcept>
#include <string>

namespace layersep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension disagreement between operands (p/q blocks, layer stacks, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on a value was violated (lo > hi, infeasible point, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents; the message names the offending byte or line.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values showed up mid-solve; the message names the iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Bad command-line invocation (maps to exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace layersep
