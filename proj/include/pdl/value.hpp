#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pdl {

class Value;
class Object;
using Array = std::vector<Value>;

/// A function value. The evaluator and the reference oracle each provide
/// their own closure type over their own environment representation.
class ClosureBase {
 public:
  virtual ~ClosureBase() = default;
  virtual std::vector<std::string> param_names() const = 0;
  /// Address of the function body AST; two closures over the same body
  /// compare equal when their captured values agree.
  virtual const void* body_identity() const = 0;
  virtual std::vector<std::pair<std::string, Value>> captured_values() const = 0;
};

using ClosurePtr = std::shared_ptr<const ClosureBase>;

enum class ValueKind { Null, Bool, Int, Float, String, Array, Object, Closure };

/// JSON datum plus closures. Arrays and objects are immutable once wrapped
/// in a Value, so copies are cheap and safe to share.
class Value {
 public:
  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  Value(T i) : data_(static_cast<std::int64_t>(i)) {}
  Value(double d) : data_(d) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(std::string_view s) : data_(std::string(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(Array a);
  Value(Object o);
  Value(ClosurePtr c) : data_(std::move(c)) {}

  ValueKind kind() const { return static_cast<ValueKind>(data_.index()); }
  bool is_null() const { return kind() == ValueKind::Null; }
  bool is_bool() const { return kind() == ValueKind::Bool; }
  bool is_int() const { return kind() == ValueKind::Int; }
  bool is_float() const { return kind() == ValueKind::Float; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return kind() == ValueKind::String; }
  bool is_array() const { return kind() == ValueKind::Array; }
  bool is_object() const { return kind() == ValueKind::Object; }
  bool is_closure() const { return kind() == ValueKind::Closure; }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  /// Int or Float widened to double.
  double as_number() const;
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Array& as_array() const { return *std::get<std::shared_ptr<const Array>>(data_); }
  const Object& as_object() const { return *std::get<std::shared_ptr<const Object>>(data_); }
  const ClosurePtr& as_closure() const { return std::get<ClosurePtr>(data_); }

  /// True for Int, and for Float holding an integral value.
  bool is_integral() const;

  /// "null", "boolean", "integer", "number", "string", "array", "object",
  /// "function".
  const char* type_name() const;

  /// Deep equality; 2 == 2.0.
  friend bool operator==(const Value& a, const Value& b);

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string,
               std::shared_ptr<const Array>, std::shared_ptr<const Object>, ClosurePtr>
      data_;
};

/// String-keyed map that keeps insertion order. Keys are unique.
class Object {
 public:
  using Member = std::pair<std::string, Value>;
  using const_iterator = std::vector<Member>::const_iterator;

  Object() = default;
  Object(std::initializer_list<Member> members);

  const Value* find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }
  /// Replaces in place when the key exists, appends otherwise.
  void set(std::string key, Value value);

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const_iterator begin() const { return members_.begin(); }
  const_iterator end() const { return members_.end(); }

  friend bool operator==(const Object& a, const Object& b) { return a.members_ == b.members_; }

 private:
  std::vector<Member> members_;
};

inline Value::Value(Array a) : data_(std::make_shared<const Array>(std::move(a))) {}
inline Value::Value(Object o) : data_(std::make_shared<const Object>(std::move(o))) {}

/// Compact JSON with ", " and ": " separators, keys in insertion order.
/// Throws ValueError on closures.
std::string to_json(const Value& value);

/// Parses standard JSON text. Integers that fit in 64 bits stay integers.
/// Throws ValueError carrying the byte offset of the failure.
Value parse_json(std::string_view text);

/// Shortest round-trip decimal form; integral doubles keep a ".0" suffix so
/// the number kind survives a round trip.
std::string format_number(double d);

}  // namespace pdl
