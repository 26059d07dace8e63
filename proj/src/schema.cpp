#include "pdl/schema.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "pdl/error.hpp"
#include "pdl/expr.hpp"
#include "pdl/typecheck.hpp"

namespace pdl {

namespace {

using Path = std::vector<std::string>;

bool type_matches(const std::string& type, const Value& v) {
  if (type == "null") return v.is_null();
  if (type == "boolean") return v.is_bool();
  if (type == "integer") return v.is_number() && v.is_integral();
  if (type == "number") return v.is_number();
  if (type == "string") return v.is_string();
  if (type == "array") return v.is_array();
  if (type == "object") return v.is_object();
  return false;
}

std::vector<std::string> type_list(const Value& t) {
  std::vector<std::string> out;
  if (t.is_string()) {
    out.push_back(t.as_string());
  } else if (t.is_array()) {
    for (const auto& e : t.as_array()) {
      if (e.is_string()) out.push_back(e.as_string());
    }
  }
  return out;
}

std::string join_names(const std::vector<std::string>& names, const std::string& last_sep) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += (i + 1 == names.size()) ? last_sep : ", ";
    out += names[i];
  }
  return out;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

std::string excerpt(const Value& v) {
  std::string s;
  try {
    s = to_json(v);
  } catch (const Error&) {
    s = "<function>";
  }
  if (s.size() > 40) s = s.substr(0, 37) + "...";
  return s;
}

std::vector<std::string> required_keys(const Value& schema) {
  std::vector<std::string> out;
  if (!schema.is_object()) return out;
  if (const Value* r = schema.as_object().find("required"); r && r->is_array()) {
    for (const auto& k : r->as_array()) {
      if (k.is_string()) out.push_back(k.as_string());
    }
  }
  return out;
}

}  // namespace

struct SchemaValidator::Run {
  const SchemaValidator& self;
  std::map<std::string, std::regex> regex_cache;

  const Value& resolve(const std::string& ref) const {
    if (ref.empty() || ref[0] != '#') throw Error("schema: only local $ref is supported: " + ref);
    const Value* cur = &self.root_;
    std::size_t pos = 1;
    while (pos < ref.size()) {
      if (ref[pos] != '/') throw Error("schema: malformed $ref " + ref);
      const std::size_t next = std::min(ref.find('/', pos + 1), ref.size());
      std::string key = ref.substr(pos + 1, next - pos - 1);
      for (std::size_t i; (i = key.find("~1")) != std::string::npos;) key.replace(i, 2, "/");
      for (std::size_t i; (i = key.find("~0")) != std::string::npos;) key.replace(i, 2, "~");
      if (!cur->is_object() || !cur->as_object().contains(key)) throw Error("schema: unresolved $ref " + ref);
      cur = cur->as_object().find(key);
      pos = next;
    }
    return *cur;
  }

  /// Follows $ref chains so discrimination can see the target's keywords.
  const Value& deref(const Value& schema) const {
    const Value* cur = &schema;
    for (int depth = 0; depth < 32 && cur->is_object(); ++depth) {
      const Value* r = cur->as_object().find("$ref");
      if (!r || !r->is_string() || cur->as_object().size() != 1) break;
      cur = &resolve(r->as_string());
    }
    return *cur;
  }

  /// Whether `v` could satisfy `schema` as far as its `type` keyword goes.
  bool type_admits(const Value& schema, const Value& v) const {
    const Value& s = deref(schema);
    if (!s.is_object()) return true;
    const Value* t = s.as_object().find("type");
    if (t) {
      for (const auto& name : type_list(*t)) {
        if (type_matches(name, v)) return true;
      }
      return false;
    }
    if (const Value* any = s.as_object().find("anyOf"); any && any->is_array()) {
      for (const auto& alt : any->as_array()) {
        if (type_admits(alt, v)) return true;
      }
      return false;
    }
    return true;
  }

  std::vector<std::string> admitted_types(const Value& schema) const {
    const Value& s = deref(schema);
    std::vector<std::string> out;
    if (!s.is_object()) return out;
    if (const Value* t = s.as_object().find("type")) return type_list(*t);
    if (const Value* any = s.as_object().find("anyOf"); any && any->is_array()) {
      for (const auto& alt : any->as_array()) {
        for (auto& name : admitted_types(alt)) {
          if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        }
      }
    }
    return out;
  }

  void validate(const Value& schema, const Value& v, const Path& path, std::vector<SchemaViolation>& out) {
    if (schema.is_bool()) {
      if (!schema.as_bool()) out.push_back({path, "not allowed here"});
      return;
    }
    if (!schema.is_object()) return;
    const Object& s = schema.as_object();
    std::vector<SchemaViolation> direct;
    std::vector<SchemaViolation> nested;

    if (const Value* r = s.find("$ref")) validate(resolve(r->as_string()), v, path, nested);

    if (const Value* t = s.find("type")) {
      const auto names = type_list(*t);
      const bool ok = std::any_of(names.begin(), names.end(), [&](const auto& n) { return type_matches(n, v); });
      if (!ok) {
        direct.push_back({path, "expected " + join_names(names, " or ") + ", found " + v.type_name()});
        finish(s, path, direct, nested, out);
        return;
      }
    }
    if (const Value* e = s.find("enum"); e && e->is_array()) {
      const auto& options = e->as_array();
      if (std::find(options.begin(), options.end(), v) == options.end()) {
        std::vector<std::string> names;
        for (const auto& o : options) names.push_back(excerpt(o));
        direct.push_back({path, "value " + excerpt(v) + " is not one of " + join_names(names, ", ")});
      }
    }
    if (const Value* c = s.find("const"); c && !(*c == v)) {
      direct.push_back({path, "expected the constant " + excerpt(*c)});
    }
    if (v.is_string()) {
      const std::string& str = v.as_string();
      if (const Value* m = s.find("minLength"); m && m->is_number() &&
                                              static_cast<double>(str.size()) < m->as_number()) {
        direct.push_back({path, str.empty() ? "must not be empty" : "string is too short"});
      }
      if (const Value* p = s.find("pattern"); p && p->is_string()) {
        auto it = regex_cache.find(p->as_string());
        if (it == regex_cache.end()) it = regex_cache.emplace(p->as_string(), std::regex(p->as_string())).first;
        if (!std::regex_search(str, it->second)) {
          direct.push_back({path, quoted(str) + " does not match " + p->as_string()});
        }
      }
    }
    if (const Value* f = s.find("format"); f && f->is_string()) {
      if (auto it = self.formats_.find(f->as_string()); it != self.formats_.end()) {
        if (auto err = it->second(v)) direct.push_back({path, *err});
      }
    }
    if (v.is_array()) {
      const auto& items = v.as_array();
      if (const Value* m = s.find("minItems"); m && m->is_number() &&
                                             static_cast<double>(items.size()) < m->as_number()) {
        direct.push_back({path, "expected at least " + stringify(*m) + " items"});
      }
      if (const Value* it = s.find("items")) {
        for (std::size_t i = 0; i < items.size(); ++i) {
          Path sub = path;
          sub.push_back(std::to_string(i));
          validate(*it, items[i], sub, nested);
        }
      }
    }
    if (v.is_object()) object_keywords(s, v.as_object(), path, direct, nested);
    if (const Value* any = s.find("anyOf"); any && any->is_array()) any_of(any->as_array(), v, path, direct, nested);
    if (const Value* one = s.find("oneOf"); one && one->is_array()) one_of(s, one->as_array(), v, path, direct, nested);

    finish(s, path, direct, nested, out);
  }

  /// errorMessage replaces the violations raised by this schema's own
  /// keywords at this location; deeper violations pass through unchanged.
  /// Ambiguous and incomplete oneOf reports are kept as nested so they
  /// survive.
  static void finish(const Object& s, const Path& path, std::vector<SchemaViolation>& direct,
                     std::vector<SchemaViolation>& nested, std::vector<SchemaViolation>& out) {
    const Value* msg = s.find("errorMessage");
    bool replaced = false;
    for (auto& d : direct) {
      if (msg && msg->is_string() && d.path == path) {
        if (!replaced) out.push_back({path, msg->as_string()});
        replaced = true;
      } else {
        out.push_back(std::move(d));
      }
    }
    for (auto& n : nested) out.push_back(std::move(n));
  }

  void object_keywords(const Object& s, const Object& obj, const Path& path, std::vector<SchemaViolation>& direct,
                       std::vector<SchemaViolation>& nested) {
    const Value* props = s.find("properties");
    const Object* props_obj = props && props->is_object() ? &props->as_object() : nullptr;
    for (const auto& key : required_keys(Value(s))) {
      if (!obj.contains(key)) direct.push_back({path, "missing required keyword " + quoted(key)});
    }
    if (const Value* m = s.find("minProperties"); m && m->is_number() &&
                                                 static_cast<double>(obj.size()) < m->as_number()) {
      direct.push_back({path, "expected at least " + stringify(*m) + " entries"});
    }
    const Value* additional = s.find("additionalProperties");
    const Value* names = s.find("propertyNames");
    for (const auto& [key, member] : obj) {
      Path sub = path;
      sub.push_back(key);
      if (names) validate(*names, Value(key), sub, nested);
      const Value* prop = props_obj ? props_obj->find(key) : nullptr;
      if (prop) {
        validate(*prop, member, sub, nested);
      } else if (additional) {
        if (additional->is_bool() && !additional->as_bool()) {
          std::vector<std::string> known;
          if (props_obj) {
            for (const auto& [k, _] : *props_obj) known.push_back(k);
          }
          direct.push_back({sub, unknown_key_message(key, known)});
        } else {
          validate(*additional, member, sub, nested);
        }
      }
    }
  }

  static std::string unknown_key_message(const std::string& key, const std::vector<std::string>& known) {
    std::string msg = "unknown keyword " + quoted(key);
    std::size_t best = 3;
    std::string hint;
    for (const auto& k : known) {
      const std::size_t d = edit_distance(key, k);
      if (d < best) {
        best = d;
        hint = k;
      }
    }
    if (!hint.empty()) msg += " (did you mean " + quoted(hint) + "?)";
    return msg;
  }

  void any_of(const Array& alts, const Value& v, const Path& path, std::vector<SchemaViolation>& direct,
              std::vector<SchemaViolation>& nested) {
    std::vector<const Value*> candidates;
    for (const auto& alt : alts) {
      if (type_admits(alt, v)) candidates.push_back(&alt);
    }
    if (candidates.empty()) {
      std::vector<std::string> names;
      for (const auto& alt : alts) {
        for (auto& n : admitted_types(alt)) {
          if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
      }
      direct.push_back({path, "expected " + join_names(names, " or ") + ", found " + v.type_name()});
      return;
    }
    if (candidates.size() == 1) {
      validate(*candidates[0], v, path, nested);
      return;
    }
    std::vector<SchemaViolation> best;
    bool have_best = false;
    for (const Value* c : candidates) {
      std::vector<SchemaViolation> errs;
      validate(*c, v, path, errs);
      if (errs.empty()) return;
      if (!have_best || errs.size() < best.size()) {
        best = std::move(errs);
        have_best = true;
      }
    }
    for (auto& e : best) nested.push_back(std::move(e));
  }

  void one_of(const Object& s, const Array& alts, const Value& v, const Path& path,
              std::vector<SchemaViolation>& direct, std::vector<SchemaViolation>& nested) {
    if (!v.is_object()) {
      int passing = 0;
      for (const auto& alt : alts) {
        std::vector<SchemaViolation> errs;
        validate(alt, v, path, errs);
        if (errs.empty()) ++passing;
      }
      if (passing != 1) direct.push_back({path, "expected exactly one matching alternative"});
      return;
    }
    const Object& obj = v.as_object();
    const Value* label_v = s.find("discriminatorLabel");
    const std::string label = label_v && label_v->is_string() ? label_v->as_string() : "alternative";
    std::vector<const Value*> full;
    std::vector<const Value*> partial;
    for (const auto& alt : alts) {
      const Value& target = deref(alt);
      const auto req = required_keys(target);
      const auto present = std::count_if(req.begin(), req.end(), [&](const auto& k) { return obj.contains(k); });
      if (present == static_cast<long>(req.size())) {
        full.push_back(&target);
      } else if (present > 0) {
        partial.push_back(&target);
      }
    }
    auto title = [](const Value* alt) {
      const Value* t = alt->is_object() ? alt->as_object().find("title") : nullptr;
      return t && t->is_string() ? t->as_string() : std::string("?");
    };
    if (full.size() == 1) {
      validate(*full[0], v, path, nested);
      return;
    }
    if (full.size() > 1) {
      std::vector<std::string> names;
      for (const Value* a : full) names.push_back(title(a));
      nested.push_back({path, "ambiguous " + label + ": " + join_names(names, ", ")});
      return;
    }
    std::set<std::string> known;
    for (const auto& alt : alts) {
      const Value& target = deref(alt);
      if (!target.is_object()) continue;
      if (const Value* p = target.as_object().find("properties"); p && p->is_object()) {
        for (const auto& [k, _] : p->as_object()) known.insert(k);
      }
    }
    for (const auto& [key, _] : obj) {
      if (!known.count(key)) {
        Path sub = path;
        sub.push_back(key);
        direct.push_back({sub, unknown_key_message(key, {known.begin(), known.end()})});
      }
    }
    if (!partial.empty()) {
      std::set<std::string> missing;
      for (const Value* a : partial) {
        for (const auto& k : required_keys(*a)) {
          if (!obj.contains(k)) missing.insert(k);
        }
      }
      std::vector<std::string> names;
      for (const auto& m : missing) names.push_back(quoted(m));
      if (partial.size() == 1) {
        direct.push_back({path, "incomplete " + title(partial[0]) + " block: missing " + join_names(names, " and ")});
      } else {
        direct.push_back({path, "incomplete block: expected " + join_names(names, " or ")});
      }
      nested.push_back(std::move(direct.back()));
      direct.pop_back();
      return;
    }
    direct.push_back({path, "no " + label + " keyword found"});
  }
};

SchemaValidator::SchemaValidator(Value schema) : root_(std::move(schema)) {}

void SchemaValidator::add_format(std::string name, FormatChecker checker) {
  formats_[std::move(name)] = std::move(checker);
}

std::vector<SchemaViolation> SchemaValidator::validate(const Value& instance) const {
  Run run{*this, {}};
  std::vector<SchemaViolation> out;
  run.validate(root_, instance, {}, out);
  return out;
}

}  // namespace pdl
