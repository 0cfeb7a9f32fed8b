#pragma once

#include <stdexcept>
#include <string>

namespace fusebox {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or semantically invalid input data (JSON records, PNG payloads).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or arguments (thresholds out of range, bad labels...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Geometry precondition violated, e.g. GIoU of two zero-area boxes.
class DegenerateBoxError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures: missing, unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fusebox
