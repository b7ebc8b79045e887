#pragma once

#include <stdexcept>
#include <string>

namespace jobtext {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input (files, records, dictionary rows).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration value.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace jobtext
