#pragma once

#include <stdexcept>
#include <string>

namespace mosaic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input records (corpus files, JSONL, index files).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace mosaic
