#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdl/diagnostic.hpp"

namespace pdl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON/YAML text that could not be parsed, or a value that cannot be
/// serialized (closures).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Syntax or evaluation error inside a `${...}` expression.
class ExprError : public Error {
 public:
  using Error::Error;
};

/// Model backend or code runner failure.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// The document is not a valid program. Maps to exit code 2.
class ProgramError : public Error {
 public:
  explicit ProgramError(std::vector<Diagnostic> diagnostics)
      : Error(diagnostics.empty() ? std::string("invalid program")
                                  : diagnostics.front().message),
        diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Evaluation aborted inside a block. `path` is the document path of the
/// innermost block that was executing. Maps to exit code 1.
class EvalError : public Error {
 public:
  EvalError(std::string path, std::string cause)
      : Error(cause + (path.empty() ? std::string() : " (at " + path + ")")),
        path_(std::move(path)),
        cause_(std::move(cause)) {}

  const std::string& path() const { return path_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string path_;
  std::string cause_;
};

}  // namespace pdl
