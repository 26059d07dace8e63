#pragma once

#include <string>
#include <vector>

namespace pdl {

enum class Severity { Error, Warning };

/// A problem found in a document, located by its path (object keys and
/// array indices from the root) and, when known, a 1-based source position.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::vector<std::string> path;
  std::string message;
  int line = 0;
  int column = 0;

  /// "/a/0/b"; "" for the root.
  std::string path_string() const;
  /// `file:line:col: severity: message`
  std::string format(const std::string& file) const;
};

std::string to_json(const std::vector<Diagnostic>& diagnostics);

/// Joins path segments as a JSON pointer ("" for the root).
std::string join_path(const std::vector<std::string>& path);

}  // namespace pdl
