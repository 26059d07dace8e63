#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdl/value.hpp"

namespace pdl {

struct SchemaViolation {
  std::vector<std::string> path;
  std::string message;
};

/// Validator for the JSON Schema subset used by the meta-schema:
/// $ref into the same document, type, enum, const, properties, required,
/// additionalProperties, propertyNames, items, minItems, minProperties,
/// minLength, pattern, anyOf, oneOf, format (via registered checkers) and
/// the errorMessage extension.
///
/// oneOf is resolved by discrimination: the candidates are the alternatives
/// whose `required` keys are all present. Several candidates make the
/// instance ambiguous; none produce a missing-keyword report.
class SchemaValidator {
 public:
  /// Returns an error message, or nullopt when the value is acceptable.
  using FormatChecker = std::function<std::optional<std::string>(const Value&)>;

  explicit SchemaValidator(Value schema);

  void add_format(std::string name, FormatChecker checker);

  std::vector<SchemaViolation> validate(const Value& instance) const;

 private:
  struct Run;

  Value root_;
  std::map<std::string, FormatChecker> formats_;
};

/// The PDL meta-schema as JSON text and as a parsed value.
const std::string& meta_schema_text();
const Value& meta_schema();

}  // namespace pdl
