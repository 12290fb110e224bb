#ifndef FEDIDS_ERROR_H_
#define FEDIDS_ERROR_H_

#include <stdexcept>
#include <string>

namespace fedids {

// Base class for every error raised by the library. The category decides the
// CLI exit code: data problems exit 2, numeric failures exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data-side failures: malformed inputs, bad files, violated preconditions.
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class InputError : public DataError {
 public:
  using DataError::DataError;
};

class StateError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class TruncationError : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class NamingError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Raised when training produces or receives non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad command-line or configuration input.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedids

#endif  // FEDIDS_ERROR_H_
