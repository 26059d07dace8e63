#include "pdl/typecheck.hpp"

#include <algorithm>
#include <regex>

#include "pdl/expr.hpp"
#include "pdl/yaml.hpp"

namespace pdl {

namespace {

const std::vector<std::string>& shorthand_names() {
  static const std::vector<std::string> names = {"str", "bool", "int", "float", "null", "obj", "list"};
  return names;
}

TypeSpec primitive(TypeSpec::Kind k) {
  TypeSpec t;
  t.kind = k;
  return t;
}

std::optional<TypeSpec> from_name(const std::string& name) {
  using K = TypeSpec::Kind;
  if (name == "str") return primitive(K::Str);
  if (name == "bool") return primitive(K::Bool);
  if (name == "int") return primitive(K::Int);
  if (name == "float") return primitive(K::Float);
  if (name == "null") return primitive(K::Null);
  if (name == "obj") return primitive(K::Object);
  if (name == "list") return primitive(K::Array);
  return std::nullopt;
}

bool is_schema_type_name(const Value& v) {
  if (!v.is_string()) return false;
  const auto& s = v.as_string();
  return s == "string" || s == "integer" || s == "number" || s == "boolean" || s == "null" || s == "array" ||
         s == "object";
}

bool is_null_schema(const Value& v) {
  if (!v.is_object() || v.as_object().size() != 1) return false;
  const Value* t = v.as_object().find("type");
  return t && t->is_string() && t->as_string() == "null";
}

TypeSpec expand_longhand(const Object& obj);

TypeSpec expand_value(const Value& spec) {
  using K = TypeSpec::Kind;
  if (spec.is_null()) return primitive(K::Null);
  if (spec.is_string()) {
    const std::string& s = spec.as_string();
    if (auto t = from_name(s)) return *t;
    const auto first = s.find_first_not_of(" \t");
    if (first != std::string::npos && (s[first] == '[' || s[first] == '{')) {
      Value parsed;
      try {
        parsed = parse_yaml(s);
      } catch (const ValueError& e) {
        throw TypeSpecError("malformed type '" + s + "': " + e.what());
      }
      return expand_value(parsed);
    }
    std::string msg = "unknown type '" + s + "'";
    if (auto hint = suggest_type_name(s)) msg += " (did you mean '" + *hint + "'?)";
    throw TypeSpecError(msg);
  }
  if (spec.is_array()) {
    const auto& items = spec.as_array();
    if (items.size() != 1) throw TypeSpecError("array type must have exactly one element type");
    TypeSpec t = primitive(K::Array);
    t.items = std::make_shared<const TypeSpec>(expand_value(items[0]));
    return t;
  }
  if (spec.is_object()) {
    const Object& obj = spec.as_object();
    if (obj.empty()) return primitive(K::Any);
    const Value* type = obj.find("type");
    if ((type && is_schema_type_name(*type)) || obj.contains("anyOf") ||
        (obj.contains("enum") && obj.size() == 1 && obj.find("enum")->is_array())) {
      return expand_longhand(obj);
    }
    if (obj.size() == 1 && obj.contains("optional")) {
      TypeSpec t = expand_value(*obj.find("optional"));
      t.optional = true;
      return t;
    }
    TypeSpec t = primitive(K::Object);
    for (const auto& [name, field] : obj) t.fields.push_back({name, expand_value(field)});
    return t;
  }
  throw TypeSpecError(std::string("a type must be a string, list or object, found ") + spec.type_name());
}

TypeSpec expand_longhand(const Object& obj) {
  using K = TypeSpec::Kind;
  if (const Value* any = obj.find("anyOf")) {
    if (!any->is_array() || any->as_array().size() != 2) {
      throw TypeSpecError("only anyOf [T, {type: null}] is supported");
    }
    const auto& alts = any->as_array();
    const Value* inner = is_null_schema(alts[1]) ? &alts[0] : (is_null_schema(alts[0]) ? &alts[1] : nullptr);
    if (!inner) throw TypeSpecError("only anyOf [T, {type: null}] is supported");
    TypeSpec t = expand_value(*inner);
    t.optional = true;
    return t;
  }
  if (const Value* e = obj.find("enum")) {
    if (!e->is_array() || e->as_array().empty()) throw TypeSpecError("enum must be a nonempty list");
    TypeSpec t = primitive(K::Enum);
    t.enum_values = e->as_array();
    return t;
  }
  const std::string& type = obj.find("type")->as_string();
  if (type == "string") return primitive(K::Str);
  if (type == "integer") return primitive(K::Int);
  if (type == "number") return primitive(K::Float);
  if (type == "boolean") return primitive(K::Bool);
  if (type == "null") return primitive(K::Null);
  if (type == "array") {
    TypeSpec t = primitive(K::Array);
    if (const Value* items = obj.find("items")) t.items = std::make_shared<const TypeSpec>(expand_value(*items));
    return t;
  }
  TypeSpec t = primitive(K::Object);
  std::vector<std::string> required;
  if (const Value* req = obj.find("required"); req && req->is_array()) {
    for (const auto& r : req->as_array()) {
      if (r.is_string()) required.push_back(r.as_string());
    }
  }
  if (const Value* props = obj.find("properties"); props && props->is_object()) {
    for (const auto& [name, schema] : props->as_object()) {
      TypeSpec field = expand_value(schema);
      if (std::find(required.begin(), required.end(), name) == required.end()) field.optional = true;
      t.fields.push_back({name, std::move(field)});
    }
  }
  return t;
}

Value schema_without_optional(const TypeSpec& type) {
  using K = TypeSpec::Kind;
  switch (type.kind) {
    case K::Any: return Value(Object{});
    case K::Str: return Value(Object{{"type", "string"}});
    case K::Bool: return Value(Object{{"type", "boolean"}});
    case K::Int: return Value(Object{{"type", "integer"}});
    case K::Float: return Value(Object{{"type", "number"}});
    case K::Null: return Value(Object{{"type", "null"}});
    case K::Enum: return Value(Object{{"enum", Value(type.enum_values)}});
    case K::Array: {
      Object o{{"type", "array"}};
      if (type.items) o.set("items", to_json_schema(*type.items));
      return Value(std::move(o));
    }
    case K::Object: {
      Object o{{"type", "object"}};
      if (!type.fields.empty()) {
        Object props;
        Array required;
        for (const auto& f : type.fields) {
          props.set(f.name, to_json_schema(f.type));
          if (!f.type.optional) required.push_back(Value(f.name));
        }
        o.set("properties", Value(std::move(props)));
        o.set("required", Value(std::move(required)));
      }
      return Value(std::move(o));
    }
  }
  return Value(Object{});
}

std::string excerpt(const Value& v) {
  std::string s;
  try {
    s = v.is_string() ? to_json(v) : stringify(v);
  } catch (const Error&) {
    s = "<function>";
  }
  if (s.size() > 60) s = s.substr(0, 57) + "...";
  return s;
}

std::optional<TypeMismatch> check_at(const Value& v, const TypeSpec& t, const std::string& path) {
  using K = TypeSpec::Kind;
  auto mismatch = [&]() { return TypeMismatch{path, describe(t), excerpt(v)}; };
  if (v.is_null() && t.optional) return std::nullopt;
  switch (t.kind) {
    case K::Any: return std::nullopt;
    case K::Str: return v.is_string() ? std::nullopt : std::optional(mismatch());
    case K::Bool: return v.is_bool() ? std::nullopt : std::optional(mismatch());
    case K::Int: return v.is_integral() ? std::nullopt : std::optional(mismatch());
    case K::Float: return v.is_number() ? std::nullopt : std::optional(mismatch());
    case K::Null: return v.is_null() ? std::nullopt : std::optional(mismatch());
    case K::Enum:
      for (const auto& e : t.enum_values) {
        if (e == v) return std::nullopt;
      }
      return mismatch();
    case K::Array: {
      if (!v.is_array()) return mismatch();
      if (!t.items) return std::nullopt;
      const auto& items = v.as_array();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (auto m = check_at(items[i], *t.items, path + "[" + std::to_string(i) + "]")) return m;
      }
      return std::nullopt;
    }
    case K::Object: {
      if (!v.is_object()) return mismatch();
      for (const auto& f : t.fields) {
        const Value* member = v.as_object().find(f.name);
        const std::string sub = path + "." + f.name;
        if (!member) {
          if (f.type.optional) continue;
          return TypeMismatch{sub, describe(f.type), "missing"};
        }
        if (auto m = check_at(*member, f.type, sub)) return m;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

TypeSpec expand_type(const Value& spec) { return expand_value(spec); }

Value to_json_schema(const TypeSpec& type) {
  Value base = schema_without_optional(type);
  if (!type.optional) return base;
  return Value(Object{{"anyOf", Value(Array{base, Value(Object{{"type", "null"}})})}});
}

Value type_to_value(const TypeSpec& type) {
  using K = TypeSpec::Kind;
  if (type.optional) {
    TypeSpec inner = type;
    inner.optional = false;
    return Value(Object{{"optional", type_to_value(inner)}});
  }
  switch (type.kind) {
    case K::Any: return Value(Object{});
    case K::Str: return Value("str");
    case K::Bool: return Value("bool");
    case K::Int: return Value("int");
    case K::Float: return Value("float");
    case K::Null: return Value("null");
    case K::Enum: return Value(Object{{"enum", Value(type.enum_values)}});
    case K::Array: return type.items ? Value(Array{type_to_value(*type.items)}) : Value("list");
    case K::Object: {
      if (type.fields.empty()) return Value("obj");
      for (const auto& f : type.fields) {
        if (f.name == "type" || f.name == "enum" || f.name == "optional" || f.name == "anyOf") {
          return to_json_schema(type);
        }
      }
      Object o;
      for (const auto& f : type.fields) o.set(f.name, type_to_value(f.type));
      return Value(std::move(o));
    }
  }
  return Value(Object{});
}

std::string describe(const TypeSpec& type) {
  using K = TypeSpec::Kind;
  std::string s;
  switch (type.kind) {
    case K::Any: s = "any"; break;
    case K::Str: s = "str"; break;
    case K::Bool: s = "bool"; break;
    case K::Int: s = "int"; break;
    case K::Float: s = "float"; break;
    case K::Null: s = "null"; break;
    case K::Enum: s = "enum" + to_json(Value(type.enum_values)); break;
    case K::Array: s = type.items ? "[" + describe(*type.items) + "]" : "list"; break;
    case K::Object:
      if (type.fields.empty()) {
        s = "obj";
      } else {
        s = "{";
        for (std::size_t i = 0; i < type.fields.size(); ++i) {
          if (i) s += ", ";
          s += type.fields[i].name + ": " + describe(type.fields[i].type);
        }
        s += "}";
      }
      break;
  }
  return type.optional ? "optional " + s : s;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  // Optimal string alignment: adjacent transpositions cost 1.
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[a.size()][b.size()];
}

std::optional<std::string> suggest_type_name(std::string_view name) {
  std::optional<std::string> best;
  std::size_t best_d = 3;
  for (const auto& candidate : shorthand_names()) {
    const std::size_t d = edit_distance(name, candidate);
    if (d < best_d) {
      best_d = d;
      best = candidate;
    }
  }
  return best;
}

std::string TypeMismatch::message() const {
  return "type mismatch at " + (path.empty() ? std::string("<root>") : path) + ": expected " + expected +
         ", found " + found;
}

std::optional<TypeMismatch> check_spec(const Value& value, const TypeSpec& type) {
  return check_at(value, type, "");
}

TranslatedRegex translate_regex(std::string_view p) {
  TranslatedRegex out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const char c = p[i];
    if (c == '\\') {
      out.pattern += c;
      if (i + 1 < p.size()) out.pattern += p[++i];
    } else if (c == '[') {
      std::size_t j = i + 1;
      if (j < p.size() && p[j] == '^') ++j;
      if (j < p.size() && p[j] == ']') ++j;
      for (; j < p.size() && p[j] != ']'; ++j) {
        if (p[j] == '\\') ++j;
      }
      if (j >= p.size()) throw ValueError("regex: unterminated character class");
      out.pattern += p.substr(i, j - i + 1);
      i = j;
    } else if (c == '(') {
      if (i + 1 < p.size() && p[i + 1] == '?') {
        std::size_t name_start = 0;
        if (p.substr(i + 2, 2) == "P<") {
          name_start = i + 4;
        } else if (i + 2 < p.size() && p[i + 2] == '<' && i + 3 < p.size() && p[i + 3] != '=' && p[i + 3] != '!') {
          name_start = i + 3;
        } else if (p.substr(i + 2, 2) == "P=") {
          throw ValueError("regex: named backreferences are not supported");
        }
        if (name_start) {
          const std::size_t close = p.find('>', name_start);
          if (close == std::string_view::npos) throw ValueError("regex: unterminated group name");
          out.group_names.emplace_back(p.substr(name_start, close - name_start));
          out.pattern += '(';
          i = close;
        } else {
          out.pattern += c;
        }
      } else {
        out.group_names.emplace_back();
        out.pattern += c;
      }
    } else {
      out.pattern += c;
    }
  }
  return out;
}

Value apply_parser(const ParserKind& parser, const std::string& raw) {
  switch (parser.kind) {
    case ParserKind::Kind::Json: return parse_json(raw);
    case ParserKind::Kind::Yaml: return parse_yaml(raw);
    case ParserKind::Kind::Jsonl: {
      Array items;
      std::size_t start = 0;
      int line_no = 0;
      while (start <= raw.size()) {
        std::size_t end = raw.find('\n', start);
        if (end == std::string::npos) end = raw.size();
        ++line_no;
        const std::string line = raw.substr(start, end - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
          try {
            items.push_back(parse_json(line));
          } catch (const ValueError& e) {
            throw ValueError("jsonl line " + std::to_string(line_no) + ": " + e.what());
          }
        }
        start = end + 1;
      }
      return Value(std::move(items));
    }
    case ParserKind::Kind::Regex: {
      const TranslatedRegex tr = translate_regex(parser.pattern);
      std::regex re;
      try {
        re = std::regex(tr.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ValueError("invalid regex '" + parser.pattern + "': " + e.what());
      }
      std::smatch m;
      if (!std::regex_match(raw, m, re)) {
        throw ValueError("regex '" + parser.pattern + "' does not match the block result");
      }
      const bool named = std::any_of(tr.group_names.begin(), tr.group_names.end(),
                                     [](const std::string& n) { return !n.empty(); });
      if (named) {
        Object obj;
        for (std::size_t g = 0; g < tr.group_names.size(); ++g) {
          if (tr.group_names[g].empty()) continue;
          obj.set(tr.group_names[g], m[g + 1].matched ? Value(m[g + 1].str()) : Value());
        }
        return Value(std::move(obj));
      }
      Array groups;
      for (std::size_t g = 1; g < m.size(); ++g) groups.push_back(m[g].matched ? Value(m[g].str()) : Value());
      return Value(std::move(groups));
    }
  }
  return Value();
}

}  // namespace pdl
