#include "pdl/parser.hpp"

#include <fstream>
#include <sstream>

#include "pdl/error.hpp"
#include "pdl/schema.hpp"
#include "pdl/typecheck.hpp"

namespace pdl {

namespace fs = std::filesystem;

namespace {

using Path = std::vector<std::string>;

const SchemaValidator& meta_validator() {
  static const SchemaValidator validator = [] {
    SchemaValidator v(meta_schema());
    v.add_format("pdl-template", [](const Value& x) -> std::optional<std::string> {
      try {
        TemplateExpr::parse(x);
      } catch (const ExprError& e) {
        return std::string(e.what());
      }
      return std::nullopt;
    });
    v.add_format("pdl-type", [](const Value& x) -> std::optional<std::string> {
      try {
        expand_type(x);
      } catch (const TypeSpecError& e) {
        return std::string(e.what());
      }
      return std::nullopt;
    });
    return v;
  }();
  return validator;
}

Diagnostic make_diagnostic(Path path, std::string message, const YamlDocument* marks) {
  Diagnostic d;
  d.path = std::move(path);
  d.message = std::move(message);
  if (marks) {
    const Mark m = marks->mark_of(join_path(d.path));
    d.line = m.line;
    d.column = m.column;
  }
  return d;
}

/// Builds the AST from a tree that already passed the meta-schema.
class Builder {
 public:
  explicit Builder(const YamlDocument* marks) : marks_(marks) {}

  Program program(const Value& v, Path& path) {
    if (!v.is_array()) return Program::single(block(v, path));
    std::vector<Block> blocks;
    const auto& items = v.as_array();
    for (std::size_t i = 0; i < items.size(); ++i) {
      path.push_back(std::to_string(i));
      blocks.push_back(block(items[i], path));
      path.pop_back();
    }
    return Program::list(std::move(blocks));
  }

 private:
  const YamlDocument* marks_;

  SourceLocation location(const Path& path) const {
    SourceLocation loc;
    loc.path = join_path(path);
    if (marks_) {
      const Mark m = marks_->mark_of(loc.path);
      loc.line = m.line;
      loc.column = m.column;
    }
    return loc;
  }

  Program sub(const Object& o, const std::string& key, Path& path) {
    path.push_back(key);
    Program p = program(*o.find(key), path);
    path.pop_back();
    return p;
  }

  std::optional<Program> optional_sub(const Object& o, const std::string& key, Path& path) {
    if (!o.contains(key)) return std::nullopt;
    return sub(o, key, path);
  }

  static TemplateExpr expr(const Object& o, const std::string& key) { return TemplateExpr::parse(*o.find(key)); }

  static NamedExprs named_exprs(const Value& v) {
    NamedExprs out;
    if (!v.is_object()) return out;
    for (const auto& [name, e] : v.as_object()) out.emplace_back(name, TemplateExpr::parse(e));
    return out;
  }

  static JoinSpec join(const Object& o) {
    JoinSpec j;
    const Value* v = o.find("join");
    if (!v) return j;
    if (const Value* as = v->as_object().find("as")) {
      const std::string& s = as->as_string();
      j.as = s == "text" ? JoinSpec::As::Text : s == "array" ? JoinSpec::As::Array : JoinSpec::As::LastOf;
    }
    if (const Value* with = v->as_object().find("with")) j.with = with->as_string();
    return j;
  }

  BlockBody body(const Object& o, Path& path) {
    if (o.contains("model")) {
      ModelBody b;
      b.model = expr(o, "model");
      b.input = optional_sub(o, "input", path);
      if (const Value* p = o.find("parameters")) b.parameters = *p;
      return b;
    }
    if (o.contains("read")) {
      ReadBody b;
      if (!o.find("read")->is_null()) b.file = expr(o, "read");
      if (o.contains("message")) b.message = expr(o, "message");
      if (const Value* m = o.find("multiline")) b.multiline = m->as_bool();
      return b;
    }
    if (o.contains("text")) return TextBody{sub(o, "text", path)};
    if (o.contains("lastOf")) return LastOfBody{sub(o, "lastOf", path)};
    if (o.contains("array")) return ArrayBody{sub(o, "array", path)};
    if (o.contains("object")) {
      ObjectBody b;
      const Value& v = *o.find("object");
      path.push_back("object");
      if (v.is_array()) {
        b.list = program(v, path);
      } else {
        for (const auto& [name, p] : v.as_object()) {
          path.push_back(name);
          b.fields.emplace_back(name, program(p, path));
          path.pop_back();
        }
      }
      path.pop_back();
      return b;
    }
    if (o.contains("data")) {
      DataBody b;
      b.value = *o.find("data");
      if (const Value* r = o.find("raw")) b.raw = r->as_bool();
      return b;
    }
    if (o.contains("include")) return IncludeBody{o.find("include")->as_string(), nullptr};
    if (o.contains("function")) {
      FunctionBody b;
      const Value& params = *o.find("function");
      if (params.is_object()) {
        for (const auto& [name, t] : params.as_object()) {
          b.params.emplace_back(name, t.is_null() ? std::nullopt : std::optional<TypeSpec>(expand_type(t)));
        }
      }
      b.body = std::make_shared<const Program>(sub(o, "return", path));
      return b;
    }
    if (o.contains("call")) {
      CallBody b;
      b.callee = expr(o, "call");
      if (const Value* a = o.find("args")) b.args = named_exprs(*a);
      b.pdl_context = optional_sub(o, "pdl_context", path);
      return b;
    }
    if (o.contains("if")) {
      IfBody b;
      b.condition = expr(o, "if");
      b.then_branch = sub(o, "then", path);
      b.else_branch = optional_sub(o, "else", path);
      return b;
    }
    if (o.contains("for")) return ForBody{named_exprs(*o.find("for")), sub(o, "repeat", path), join(o)};
    if (o.contains("num_iterations")) return RepeatBody{sub(o, "repeat", path), expr(o, "num_iterations"), join(o)};
    if (o.contains("until")) return RepeatUntilBody{sub(o, "repeat", path), expr(o, "until"), join(o)};
    if (o.contains("code")) return CodeBody{sub(o, "code", path), o.find("lang")->as_string()};
    if (o.contains("get")) return GetBody{o.find("get")->as_string()};
    throw Error("block has no body keyword");
  }

  Block block(const Value& v, Path& path) {
    if (!v.is_object()) {
      Block b(ExprLeaf{TemplateExpr::parse(v)});
      b.location = location(path);
      return b;
    }
    const Object& o = v.as_object();
    Block b(body(o, path));
    b.location = location(path);
    if (const Value* d = o.find("description")) b.description = d->as_string();
    if (const Value* d = o.find("def")) b.def = d->as_string();
    if (const Value* defs = o.find("defs")) {
      path.push_back("defs");
      for (const auto& [name, p] : defs->as_object()) {
        path.push_back(name);
        b.defs.emplace_back(name, program(p, path));
        path.pop_back();
      }
      path.pop_back();
    }
    if (const Value* r = o.find("role")) b.role = r->as_string();
    if (const Value* c = o.find("contribute")) {
      b.contribute = ContributeSet{false, false};
      for (const auto& dest : c->as_array()) {
        if (dest.as_string() == "result") b.contribute.result = true;
        if (dest.as_string() == "context") b.contribute.context = true;
      }
    }
    if (const Value* p = o.find("parser")) {
      ParserKind k;
      if (p->is_string()) {
        const std::string& s = p->as_string();
        k.kind = s == "json" ? ParserKind::Kind::Json : s == "yaml" ? ParserKind::Kind::Yaml : ParserKind::Kind::Jsonl;
      } else {
        k.kind = ParserKind::Kind::Regex;
        k.pattern = p->as_object().find("regex")->as_string();
      }
      b.parser = k;
    }
    if (const Value* s = o.find("spec")) b.spec = expand_type(*s);
    return b;
  }
};

Program desugar_program(const Program& p);

/// A list in a body position becomes one explicit lastOf block.
Program wrap(const Program& p, const SourceLocation& parent, const std::string& field) {
  Program inner = desugar_program(p);
  if (!inner.is_list) return inner;
  Block b(LastOfBody{std::move(inner)});
  b.location = parent;
  b.location.path += "/" + field;
  return Program::single(std::move(b));
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Block desugar_block(const Block& in) {
  Block b = in;
  const SourceLocation& loc = in.location;
  for (auto& [name, p] : b.defs) p = wrap(p, loc, "defs/" + name);
  std::visit(Overloaded{
                 [](ExprLeaf&) {},
                 [&](ModelBody& m) {
                   if (m.input) m.input = wrap(*m.input, loc, "input");
                 },
                 [](ReadBody&) {},
                 [](DataBody&) {},
                 [](GetBody&) {},
                 [](IncludeBody&) {},
                 [&](TextBody& t) { t.body = desugar_program(t.body); },
                 [&](LastOfBody& t) { t.body = desugar_program(t.body); },
                 [&](ArrayBody& t) { t.body = desugar_program(t.body); },
                 [&](ObjectBody& o) {
                   if (o.list) o.list = desugar_program(*o.list);
                   for (auto& [name, p] : o.fields) p = wrap(p, loc, "object/" + name);
                 },
                 [&](FunctionBody& f) { f.body = std::make_shared<const Program>(wrap(*f.body, loc, "return")); },
                 [&](CallBody& c) {
                   if (c.pdl_context) c.pdl_context = desugar_program(*c.pdl_context);
                 },
                 [&](IfBody& i) {
                   i.then_branch = wrap(i.then_branch, loc, "then");
                   if (i.else_branch) i.else_branch = wrap(*i.else_branch, loc, "else");
                 },
                 [&](ForBody& f) { f.body = wrap(f.body, loc, "repeat"); },
                 [&](RepeatBody& r) { r.body = wrap(r.body, loc, "repeat"); },
                 [&](RepeatUntilBody& r) { r.body = wrap(r.body, loc, "repeat"); },
                 [&](CodeBody& c) { c.source = wrap(c.source, loc, "code"); },
             },
             b.body);
  return b;
}

Program desugar_program(const Program& p) {
  Program out;
  out.is_list = p.is_list;
  for (const auto& b : p.blocks) out.blocks.push_back(desugar_block(b));
  return out;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Block resolve_block(const Block& in, const fs::path& base_dir, std::vector<fs::path>& stack);

Program resolve_program(const Program& p, const fs::path& base_dir, std::vector<fs::path>& stack) {
  Program out;
  out.is_list = p.is_list;
  for (const auto& b : p.blocks) out.blocks.push_back(resolve_block(b, base_dir, stack));
  return out;
}

Block resolve_block(const Block& in, const fs::path& base_dir, std::vector<fs::path>& stack) {
  Block b = in;
  auto r = [&](Program& p) { p = resolve_program(p, base_dir, stack); };
  for (auto& [name, p] : b.defs) r(p);
  std::visit(Overloaded{
                 [](ExprLeaf&) {},
                 [&](ModelBody& m) {
                   if (m.input) r(*m.input);
                 },
                 [](ReadBody&) {},
                 [](DataBody&) {},
                 [](GetBody&) {},
                 [&](IncludeBody& i) {
                   try {
                     i.resolved = std::make_shared<const Program>(resolve_include(i, base_dir, stack));
                   } catch (const ProgramError& e) {
                     std::vector<Diagnostic> diags;
                     for (auto d : e.diagnostics()) {
                       if (d.path.empty() && d.line == 0) {
                         d.line = in.location.line;
                         d.column = in.location.column;
                       }
                       diags.push_back(std::move(d));
                     }
                     throw ProgramError(std::move(diags));
                   }
                 },
                 [&](TextBody& t) { r(t.body); },
                 [&](LastOfBody& t) { r(t.body); },
                 [&](ArrayBody& t) { r(t.body); },
                 [&](ObjectBody& o) {
                   if (o.list) r(*o.list);
                   for (auto& [name, p] : o.fields) r(p);
                 },
                 [&](FunctionBody& f) { f.body = std::make_shared<const Program>(resolve_program(*f.body, base_dir, stack)); },
                 [&](CallBody& c) {
                   if (c.pdl_context) r(*c.pdl_context);
                 },
                 [&](IfBody& i) {
                   r(i.then_branch);
                   if (i.else_branch) r(*i.else_branch);
                 },
                 [&](ForBody& f) { r(f.body); },
                 [&](RepeatBody& x) { r(x.body); },
                 [&](RepeatUntilBody& x) { r(x.body); },
                 [&](CodeBody& c) { r(c.source); },
             },
             b.body);
  return b;
}

ProgramError single_error(std::string message) {
  Diagnostic d;
  d.message = std::move(message);
  return ProgramError({std::move(d)});
}

}  // namespace

std::vector<Diagnostic> validate_meta_schema(const Value& document, const YamlDocument* marks) {
  std::vector<Diagnostic> out;
  for (auto& v : meta_validator().validate(document)) {
    out.push_back(make_diagnostic(std::move(v.path), std::move(v.message), marks));
  }
  return out;
}

ParseResult parse_document(const YamlDocument& document) {
  ParseResult result;
  result.diagnostics = validate_meta_schema(document.root, &document);
  if (!result.diagnostics.empty()) return result;
  try {
    Path path;
    result.program = desugar(Builder(&document).program(document.root, path));
  } catch (const Error& e) {
    result.diagnostics.push_back(make_diagnostic({}, e.what(), &document));
  }
  return result;
}

ParseResult parse_program(std::string_view source_text) {
  YamlDocument doc;
  try {
    doc = load_yaml(source_text);
  } catch (const YamlError& e) {
    ParseResult r;
    Diagnostic d;
    d.message = e.what();
    d.line = e.mark().line;
    d.column = e.mark().column;
    r.diagnostics.push_back(std::move(d));
    return r;
  }
  return parse_document(doc);
}

Program desugar(const Program& program) { return desugar_program(program); }

Program resolve_include(const IncludeBody& include, const fs::path& base_dir, std::vector<fs::path>& stack) {
  const fs::path target = (base_dir / include.file).lexically_normal();
  const std::string from = stack.empty() ? std::string("<input>") : stack.back().string();
  std::error_code ec;
  if (!fs::is_regular_file(target, ec)) {
    throw single_error("cannot include '" + target.string() + "' from '" + from + "': file not found");
  }
  const fs::path canonical = fs::weakly_canonical(target, ec);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (stack[i] == canonical) {
      std::string cycle;
      for (std::size_t j = i; j < stack.size(); ++j) cycle += stack[j].filename().string() + " -> ";
      cycle += canonical.filename().string();
      throw single_error("include cycle: " + cycle);
    }
  }
  ParseResult parsed = parse_program(read_file(target));
  if (!parsed.ok()) {
    for (auto& d : parsed.diagnostics) d.message = target.string() + ": " + d.message;
    throw ProgramError(std::move(parsed.diagnostics));
  }
  stack.push_back(canonical);
  Program resolved = resolve_program(*parsed.program, target.parent_path(), stack);
  stack.pop_back();
  return resolved;
}

Program resolve_includes(const Program& program, const fs::path& base_dir, std::vector<fs::path>& stack) {
  return resolve_program(program, base_dir, stack);
}

Program load_program_file(const fs::path& file) {
  ParseResult parsed = parse_program(read_file(file));
  if (!parsed.ok()) throw ProgramError(std::move(parsed.diagnostics));
  std::error_code ec;
  std::vector<fs::path> stack{fs::weakly_canonical(file, ec)};
  return resolve_program(*parsed.program, file.parent_path(), stack);
}

std::string serialize_program(const Program& program) { return to_yaml(program_to_value(program)); }

}  // namespace pdl
