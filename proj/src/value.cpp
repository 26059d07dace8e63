#include "pdl/value.hpp"

#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>

#include "pdl/error.hpp"

namespace pdl {

double Value::as_number() const {
  return is_int() ? static_cast<double>(as_int()) : as_float();
}

bool Value::is_integral() const {
  if (is_int()) return true;
  if (!is_float()) return false;
  const double d = as_float();
  return std::isfinite(d) && std::floor(d) == d;
}

const char* Value::type_name() const {
  switch (kind()) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "boolean";
    case ValueKind::Int: return "integer";
    case ValueKind::Float: return "number";
    case ValueKind::String: return "string";
    case ValueKind::Array: return "array";
    case ValueKind::Object: return "object";
    case ValueKind::Closure: return "function";
  }
  return "unknown";
}

bool operator==(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.as_number() == b.as_number();
  }
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::Null: return true;
    case ValueKind::Bool: return a.as_bool() == b.as_bool();
    case ValueKind::String: return a.as_string() == b.as_string();
    case ValueKind::Array: return a.as_array() == b.as_array();
    case ValueKind::Object: return a.as_object() == b.as_object();
    case ValueKind::Closure: {
      const auto& x = *a.as_closure();
      const auto& y = *b.as_closure();
      if (&x == &y) return true;
      return x.body_identity() == y.body_identity() && x.param_names() == y.param_names() &&
             x.captured_values() == y.captured_values();
    }
    default: return false;
  }
}

Object::Object(std::initializer_list<Member> members) {
  for (const auto& m : members) set(m.first, m.second);
}

const Value* Object::find(std::string_view key) const {
  for (const auto& m : members_) {
    if (m.first == key) return &m.second;
  }
  return nullptr;
}

void Object::set(std::string key, Value value) {
  for (auto& m : members_) {
    if (m.first == key) {
      m.second = std::move(value);
      return;
    }
  }
  members_.emplace_back(std::move(key), std::move(value));
}

std::string format_number(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, end);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

void write_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          static const char* hex = "0123456789abcdef";
          out += "\\u00";
          out += hex[c >> 4];
          out += hex[c & 0xF];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void write_json(std::string& out, const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: out += "null"; break;
    case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case ValueKind::Int: out += std::to_string(v.as_int()); break;
    case ValueKind::Float: {
      const double d = v.as_float();
      if (!std::isfinite(d)) throw ValueError("cannot serialize non-finite number to JSON");
      out += format_number(d);
      break;
    }
    case ValueKind::String: write_json_string(out, v.as_string()); break;
    case ValueKind::Array: {
      out += '[';
      bool first = true;
      for (const auto& item : v.as_array()) {
        if (!first) out += ", ";
        first = false;
        write_json(out, item);
      }
      out += ']';
      break;
    }
    case ValueKind::Object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.as_object()) {
        if (!first) out += ", ";
        first = false;
        write_json_string(out, key);
        out += ": ";
        write_json(out, item);
      }
      out += '}';
      break;
    }
    case ValueKind::Closure: throw ValueError("unserializable value: function");
  }
}

Value from_nlohmann(const nlohmann::ordered_json& j) {
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::null: return Value();
    case nlohmann::ordered_json::value_t::boolean: return Value(j.get<bool>());
    case nlohmann::ordered_json::value_t::number_integer: return Value(j.get<std::int64_t>());
    case nlohmann::ordered_json::value_t::number_unsigned: {
      const auto u = j.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(INT64_MAX)) return Value(static_cast<std::int64_t>(u));
      return Value(static_cast<double>(u));
    }
    case nlohmann::ordered_json::value_t::number_float: return Value(j.get<double>());
    case nlohmann::ordered_json::value_t::string: return Value(j.get<std::string>());
    case nlohmann::ordered_json::value_t::array: {
      Array items;
      items.reserve(j.size());
      for (const auto& item : j) items.push_back(from_nlohmann(item));
      return Value(std::move(items));
    }
    case nlohmann::ordered_json::value_t::object: {
      Object obj;
      for (const auto& [key, item] : j.items()) obj.set(key, from_nlohmann(item));
      return Value(std::move(obj));
    }
    default: throw ValueError("unsupported JSON value");
  }
}

}  // namespace

std::string to_json(const Value& value) {
  std::string out;
  write_json(out, value);
  return out;
}

Value parse_json(std::string_view text) {
  try {
    return from_nlohmann(nlohmann::ordered_json::parse(text.begin(), text.end()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValueError("invalid JSON at offset " + std::to_string(e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
}

}  // namespace pdl
