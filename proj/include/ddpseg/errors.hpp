#pragma once

#include <stdexcept>
#include <string>

namespace ddpseg {

// Base for every error the library raises. The CLI maps IoError to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text or binary data. Messages name the offending row/column.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between arrays that must agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value outside its documented domain (precondition violation).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The file system refused a read or write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddpseg
