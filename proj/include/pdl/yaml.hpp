#pragma once

#include <map>
#include <string>
#include <string_view>

#include "pdl/error.hpp"
#include "pdl/value.hpp"

namespace pdl {

struct Mark {
  int line = 0;  // 1-based
  int column = 0;
};

class YamlError : public ValueError {
 public:
  YamlError(const std::string& message, Mark mark) : ValueError(message), mark_(mark) {}
  Mark mark() const { return mark_; }

 private:
  Mark mark_;
};

/// A YAML document as a data tree, plus the source position of every node
/// keyed by its JSON-pointer path.
struct YamlDocument {
  Value root;
  std::map<std::string, Mark> marks;

  /// Position of the node at `path`, or of its nearest recorded ancestor.
  Mark mark_of(const std::string& path) const;
};

/// Plain scalars resolve with the YAML 1.2 core schema (null, booleans,
/// integers, floats); quoted and block scalars are strings.
/// Throws YamlError on syntax errors and duplicate keys.
YamlDocument load_yaml(std::string_view text);

inline Value parse_yaml(std::string_view text) { return load_yaml(text).root; }

/// Block-style YAML; strings are always double-quoted.
std::string to_yaml(const Value& value);

}  // namespace pdl
