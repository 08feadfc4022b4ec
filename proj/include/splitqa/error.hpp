#pragma once

#include <stdexcept>
#include <string>

namespace splitqa {

// Base for every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document. `path` is a JSON-pointer-like location.
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A backend or scorer transport went away (process exited, socket closed).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace splitqa
