#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdl/ast.hpp"
#include "pdl/error.hpp"
#include "pdl/type_spec.hpp"
#include "pdl/value.hpp"

namespace pdl {

class TypeSpecError : public Error {
 public:
  using Error::Error;
};

/// Expands a `spec:` value into a TypeSpec. Accepts shorthand names
/// (str, bool, int, float, null, obj, list), `[T]`, `{field: T, ...}`,
/// `{enum: [...]}`, `{optional: T}`, the same forms written as a YAML flow
/// string, and the longhand JSON Schema subset produced by to_json_schema.
/// Throws TypeSpecError; unknown names come with a nearest-name suggestion.
TypeSpec expand_type(const Value& spec);

/// The longhand JSON Schema equivalent of `type`.
Value to_json_schema(const TypeSpec& type);

/// Source form of `type`: shorthand where it is unambiguous, longhand
/// otherwise. expand_type(type_to_value(t)) == t.
Value type_to_value(const TypeSpec& type);

/// Compact shorthand rendering, e.g. `{name: str, arguments: obj}`.
std::string describe(const TypeSpec& type);

/// Closest shorthand name within edit distance 2, if any.
std::optional<std::string> suggest_type_name(std::string_view name);

std::size_t edit_distance(std::string_view a, std::string_view b);

struct TypeMismatch {
  std::string path;      // ".arguments", "[0].name", "" for the root
  std::string expected;  // describe() of the failing fragment
  std::string found;     // short excerpt of the value, or "missing"

  std::string message() const;
};

/// Structural check; returns the first mismatch in depth-first field order.
std::optional<TypeMismatch> check_spec(const Value& value, const TypeSpec& type);

/// Turns a block's string result into structured data. Throws ValueError on
/// malformed input or a regex that does not match the whole string.
Value apply_parser(const ParserKind& parser, const std::string& raw);

/// Regex source translated to ECMAScript plus the name of each capture
/// group (empty for unnamed groups). `(?P<n>...)` and `(?<n>...)` name groups.
struct TranslatedRegex {
  std::string pattern;
  std::vector<std::string> group_names;
};
TranslatedRegex translate_regex(std::string_view pattern);

}  // namespace pdl
