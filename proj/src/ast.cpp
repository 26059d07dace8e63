#include "pdl/ast.hpp"

#include "pdl/error.hpp"
#include "pdl/typecheck.hpp"

namespace pdl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Value named_exprs(const NamedExprs& exprs) {
  Object o;
  for (const auto& [name, e] : exprs) o.set(name, e.source());
  return Value(std::move(o));
}

void put_join(Object& o, const JoinSpec& join) {
  if (join.as == JoinSpec::As::LastOf && !join.with) return;
  Object j;
  switch (join.as) {
    case JoinSpec::As::Text: j.set("as", "text"); break;
    case JoinSpec::As::Array: j.set("as", "array"); break;
    case JoinSpec::As::LastOf: j.set("as", "lastOf"); break;
  }
  if (join.with) j.set("with", *join.with);
  o.set("join", Value(std::move(j)));
}

void put_body(Object& o, const BlockBody& body) {
  std::visit(Overloaded{
                 [&](const ExprLeaf&) { throw Error("an expression leaf has no keyword form"); },
                 [&](const ModelBody& b) {
                   o.set("model", b.model.source());
                   if (b.input) o.set("input", program_to_value(*b.input));
                   if (b.parameters) o.set("parameters", *b.parameters);
                 },
                 [&](const ReadBody& b) {
                   o.set("read", b.file ? b.file->source() : Value());
                   if (b.message) o.set("message", b.message->source());
                   if (b.multiline) o.set("multiline", true);
                 },
                 [&](const TextBody& b) { o.set("text", program_to_value(b.body)); },
                 [&](const LastOfBody& b) { o.set("lastOf", program_to_value(b.body)); },
                 [&](const ArrayBody& b) { o.set("array", program_to_value(b.body)); },
                 [&](const ObjectBody& b) {
                   if (b.list) {
                     o.set("object", program_to_value(*b.list));
                   } else {
                     Object fields;
                     for (const auto& [name, p] : b.fields) fields.set(name, program_to_value(p));
                     o.set("object", Value(std::move(fields)));
                   }
                 },
                 [&](const DataBody& b) {
                   o.set("data", b.value);
                   if (b.raw) o.set("raw", true);
                 },
                 [&](const IncludeBody& b) { o.set("include", b.file); },
                 [&](const FunctionBody& b) {
                   Object params;
                   for (const auto& [name, type] : b.params) params.set(name, type ? type_to_value(*type) : Value());
                   o.set("function", Value(std::move(params)));
                   o.set("return", program_to_value(*b.body));
                 },
                 [&](const CallBody& b) {
                   o.set("call", b.callee.source());
                   if (!b.args.empty()) o.set("args", named_exprs(b.args));
                   if (b.pdl_context) o.set("pdl_context", program_to_value(*b.pdl_context));
                 },
                 [&](const IfBody& b) {
                   o.set("if", b.condition.source());
                   o.set("then", program_to_value(b.then_branch));
                   if (b.else_branch) o.set("else", program_to_value(*b.else_branch));
                 },
                 [&](const ForBody& b) {
                   o.set("for", named_exprs(b.bindings));
                   o.set("repeat", program_to_value(b.body));
                   put_join(o, b.join);
                 },
                 [&](const RepeatBody& b) {
                   o.set("repeat", program_to_value(b.body));
                   o.set("num_iterations", b.times.source());
                   put_join(o, b.join);
                 },
                 [&](const RepeatUntilBody& b) {
                   o.set("repeat", program_to_value(b.body));
                   o.set("until", b.until.source());
                   put_join(o, b.join);
                 },
                 [&](const CodeBody& b) {
                   o.set("code", program_to_value(b.source));
                   o.set("lang", b.lang);
                 },
                 [&](const GetBody& b) { o.set("get", b.name); },
             },
             body);
}

bool has_keywords(const Block& b) {
  return b.description || b.def || !b.defs.empty() || b.role || !(b.contribute == ContributeSet{}) || b.parser ||
         b.spec;
}

}  // namespace

std::string default_role(const BlockBody& body) {
  return std::holds_alternative<ModelBody>(body) ? "assistant" : "user";
}

std::string kind_name(const BlockBody& body) {
  static const char* const names[] = {"expr",    "model",    "read", "text",   "lastOf", "array",
                                      "object",  "data",     "include", "function", "call", "if",
                                      "for",     "repeat",   "repeat-until", "code", "get"};
  static_assert(std::size(names) == std::variant_size_v<BlockBody>);
  return names[body.index()];
}

Value block_to_value(const Block& block) {
  if (const auto* leaf = std::get_if<ExprLeaf>(&block.body)) {
    if (has_keywords(block)) throw Error("an expression leaf cannot carry block keywords");
    return leaf->expr.source();
  }
  Object o;
  if (block.description) o.set("description", *block.description);
  if (!block.defs.empty()) {
    Object defs;
    for (const auto& [name, p] : block.defs) defs.set(name, program_to_value(p));
    o.set("defs", Value(std::move(defs)));
  }
  if (block.def) o.set("def", *block.def);
  if (block.role) o.set("role", *block.role);
  put_body(o, block.body);
  if (!(block.contribute == ContributeSet{})) {
    Array c;
    if (block.contribute.result) c.push_back(Value("result"));
    if (block.contribute.context) c.push_back(Value("context"));
    o.set("contribute", Value(std::move(c)));
  }
  if (block.parser) {
    switch (block.parser->kind) {
      case ParserKind::Kind::Json: o.set("parser", "json"); break;
      case ParserKind::Kind::Yaml: o.set("parser", "yaml"); break;
      case ParserKind::Kind::Jsonl: o.set("parser", "jsonl"); break;
      case ParserKind::Kind::Regex: o.set("parser", Value(Object{{"regex", block.parser->pattern}})); break;
    }
  }
  if (block.spec) o.set("spec", type_to_value(*block.spec));
  return Value(std::move(o));
}

Value program_to_value(const Program& program) {
  if (!program.is_list) {
    if (program.blocks.size() != 1) throw Error("a single-block program must hold exactly one block");
    return block_to_value(program.blocks.front());
  }
  Array items;
  for (const auto& b : program.blocks) items.push_back(block_to_value(b));
  return Value(std::move(items));
}

}  // namespace pdl
