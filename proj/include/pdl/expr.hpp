#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pdl/value.hpp"

namespace pdl {
namespace expr {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Read-only name resolution for expressions.
class Scope {
 public:
  virtual ~Scope() = default;
  /// nullptr when unbound.
  virtual const Value* lookup(std::string_view name) const = 0;
};

class EmptyScope final : public Scope {
 public:
  const Value* lookup(std::string_view) const override { return nullptr; }
};

/// Parses the text between `${` and `}` (or a whole code-runner source).
/// Throws ExprError on syntax errors.
NodePtr parse(std::string_view source);

Value evaluate(const Node& node, const Scope& scope);

/// Names of the supported filters.
const std::vector<std::string>& filter_names();

}  // namespace expr

/// A scalar from the source document: a literal, a string that is exactly
/// one `${...}` (keeps the expression's type), or a string with embedded
/// `${...}` segments (always a string). `\${` writes a literal `${`.
class TemplateExpr {
 public:
  enum class Kind { Literal, Pure, Interpolation };

  TemplateExpr() = default;

  /// Throws ExprError on malformed templates and on `{%` statement tags.
  static TemplateExpr parse(const Value& scalar);
  static TemplateExpr literal(Value v);

  Kind kind() const { return kind_; }
  /// The scalar exactly as written in the document.
  const Value& source() const { return source_; }

  Value evaluate(const expr::Scope& scope) const;

  friend bool operator==(const TemplateExpr& a, const TemplateExpr& b) {
    return a.source_ == b.source_;
  }

 private:
  using Segment = std::variant<std::string, expr::NodePtr>;

  Kind kind_ = Kind::Literal;
  Value source_;
  Value literal_;
  expr::NodePtr pure_;
  std::vector<Segment> segments_;
};

Value eval_expr(const expr::Scope& scope, const TemplateExpr& e);

/// false, null, 0, "", [] and {} are false; everything else is true.
bool truthy(const Value& v);

bool eval_condition(const expr::Scope& scope, const TemplateExpr& e);

/// Strings verbatim, null as "", booleans as true/false, numbers in
/// shortest form, arrays and objects as compact JSON. Throws ValueError
/// on closures.
std::string stringify(const Value& v);

}  // namespace pdl
