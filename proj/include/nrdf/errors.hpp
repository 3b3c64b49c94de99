#pragma once

#include <stdexcept>
#include <string>

namespace nrdf {

enum class ErrorKind {
  Validation,
  Shape,
  Support,
  GridTooLarge,
  TableTooLarge,
  NonConvergence,
  Consistency,
  Io,
  CorruptFile,
  Version,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit codes used by the command line front end.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonConvergence:
    case ErrorKind::Consistency:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::CorruptFile:
    case ErrorKind::Version:
      return 3;
    default:
      return 1;
  }
}

}  // namespace nrdf
