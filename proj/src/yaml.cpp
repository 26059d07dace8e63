#include "pdl/yaml.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <regex>

#include "pdl/diagnostic.hpp"

namespace pdl {

namespace {

Value resolve_plain(const std::string& s) {
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return Value();
  if (s == "true" || s == "True" || s == "TRUE") return Value(true);
  if (s == "false" || s == "False" || s == "FALSE") return Value(false);
  static const std::regex kInt("[-+]?[0-9]+");
  static const std::regex kOct("0o[0-7]+");
  static const std::regex kHex("0x[0-9a-fA-F]+");
  static const std::regex kFloat("[-+]?(\\.[0-9]+|[0-9]+(\\.[0-9]*)?)([eE][-+]?[0-9]+)?");
  if (std::regex_match(s, kInt)) {
    std::int64_t v = 0;
    const char* b = s.data() + (s[0] == '+' ? 1 : 0);
    auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
    if (ec == std::errc()) return Value(v);
    return Value(std::stod(s));
  }
  if (std::regex_match(s, kOct) || std::regex_match(s, kHex)) {
    std::int64_t v = 0;
    const int base = s[1] == 'o' ? 8 : 16;
    auto [p, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), v, base);
    if (ec == std::errc()) return Value(v);
  }
  if (std::regex_match(s, kFloat)) return Value(std::stod(s));
  if (s == ".inf" || s == ".Inf" || s == ".INF" || s == "+.inf") return Value(std::numeric_limits<double>::infinity());
  if (s == "-.inf" || s == "-.Inf" || s == "-.INF") return Value(-std::numeric_limits<double>::infinity());
  if (s == ".nan" || s == ".NaN" || s == ".NAN") return Value(std::numeric_limits<double>::quiet_NaN());
  return Value(s);
}

Value resolve_scalar(const YAML::Node& node) {
  const std::string& tag = node.Tag();
  const std::string& s = node.Scalar();
  if (tag == "?") return resolve_plain(s);
  if (tag == "!" || tag == "tag:yaml.org,2002:str") return Value(s);
  if (tag == "tag:yaml.org,2002:int" || tag == "tag:yaml.org,2002:float" || tag == "tag:yaml.org,2002:bool" ||
      tag == "tag:yaml.org,2002:null") {
    return resolve_plain(s);
  }
  return Value(s);
}

Mark to_mark(const YAML::Mark& m) { return Mark{m.line + 1, m.column + 1}; }

Value convert(const YAML::Node& node, std::vector<std::string>& path, std::map<std::string, Mark>& marks) {
  marks[join_path(path)] = to_mark(node.Mark());
  switch (node.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null: return Value();
    case YAML::NodeType::Scalar: return resolve_scalar(node);
    case YAML::NodeType::Sequence: {
      Array items;
      std::size_t i = 0;
      for (const auto& child : node) {
        path.push_back(std::to_string(i++));
        items.push_back(convert(child, path, marks));
        path.pop_back();
      }
      return Value(std::move(items));
    }
    case YAML::NodeType::Map: {
      Object obj;
      for (const auto& kv : node) {
        if (!kv.first.IsScalar()) throw YamlError("mapping keys must be scalars", to_mark(kv.first.Mark()));
        const std::string key = kv.first.Scalar();
        if (obj.contains(key)) throw YamlError("duplicate key '" + key + "'", to_mark(kv.first.Mark()));
        path.push_back(key);
        Value child = convert(kv.second, path, marks);
        marks[join_path(path)] = to_mark(kv.first.Mark());
        path.pop_back();
        obj.set(key, std::move(child));
      }
      return Value(std::move(obj));
    }
  }
  return Value();
}

void emit(YAML::Emitter& out, const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: out << YAML::Null; break;
    case ValueKind::Bool: out << (v.as_bool() ? "true" : "false"); break;
    case ValueKind::Int: out << std::to_string(v.as_int()); break;
    case ValueKind::Float: {
      const double d = v.as_float();
      if (std::isnan(d)) {
        out << ".nan";
      } else if (std::isinf(d)) {
        out << (d > 0 ? ".inf" : "-.inf");
      } else {
        out << format_number(d);
      }
      break;
    }
    case ValueKind::String: out << YAML::DoubleQuoted << v.as_string(); break;
    case ValueKind::Array:
      out << YAML::BeginSeq;
      for (const auto& item : v.as_array()) emit(out, item);
      out << YAML::EndSeq;
      break;
    case ValueKind::Object:
      out << YAML::BeginMap;
      for (const auto& [key, item] : v.as_object()) {
        out << YAML::Key;
        static const std::regex kPlainKey("[A-Za-z_][A-Za-z0-9_]*");
        const bool ambiguous = resolve_plain(key) != Value(key);
        if (std::regex_match(key, kPlainKey) && !ambiguous) {
          out << key;
        } else {
          out << YAML::DoubleQuoted << key;
        }
        out << YAML::Value;
        emit(out, item);
      }
      out << YAML::EndMap;
      break;
    case ValueKind::Closure: throw ValueError("unserializable value: function");
  }
}

}  // namespace

Mark YamlDocument::mark_of(const std::string& path) const {
  std::string p = path;
  for (;;) {
    auto it = marks.find(p);
    if (it != marks.end()) return it->second;
    if (p.empty()) return Mark{};
    p = p.substr(0, p.rfind('/'));
  }
}

YamlDocument load_yaml(std::string_view text) {
  YamlDocument doc;
  YAML::Node node;
  try {
    node = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw YamlError("YAML syntax error: " + e.msg, to_mark(e.mark));
  }
  std::vector<std::string> path;
  doc.root = convert(node, path, doc.marks);
  return doc;
}

std::string to_yaml(const Value& value) {
  YAML::Emitter out;
  out.SetIndent(2);
  emit(out, value);
  if (!out.good()) throw ValueError("YAML emitter error: " + out.GetLastError());
  std::string s = out.c_str();
  if (s.empty() || s.back() != '\n') s += '\n';
  return s;
}

}  // namespace pdl
