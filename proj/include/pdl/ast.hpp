#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pdl/expr.hpp"
#include "pdl/type_spec.hpp"
#include "pdl/value.hpp"

namespace pdl {

struct Block;

/// A single block, or a list of blocks evaluated in sequence.
struct Program {
  std::vector<Block> blocks;
  bool is_list = false;

  static Program single(Block b);
  static Program list(std::vector<Block> blocks);
};

struct ContributeSet {
  bool result = true;
  bool context = true;

  friend bool operator==(const ContributeSet&, const ContributeSet&) = default;
};

struct JoinSpec {
  enum class As { Text, Array, LastOf };
  As as = As::LastOf;
  std::optional<std::string> with;
};

struct ParserKind {
  enum class Kind { Json, Yaml, Jsonl, Regex };
  Kind kind = Kind::Json;
  std::string pattern;  // Regex only
};

using Params = std::vector<std::pair<std::string, std::optional<TypeSpec>>>;
using NamedExprs = std::vector<std::pair<std::string, TemplateExpr>>;
using NamedPrograms = std::vector<std::pair<std::string, Program>>;

struct ExprLeaf {
  TemplateExpr expr;
};
struct ModelBody {
  TemplateExpr model;
  std::optional<Program> input;
  std::optional<Value> parameters;  // object; string scalars are templates
};
struct ReadBody {
  std::optional<TemplateExpr> file;
  std::optional<TemplateExpr> message;
  bool multiline = false;
};
struct TextBody {
  Program body;
};
struct LastOfBody {
  Program body;
};
struct ArrayBody {
  Program body;
};
/// Either a field map (`object: {k: pdl}`) or a list of object-valued blocks.
struct ObjectBody {
  NamedPrograms fields;
  std::optional<Program> list;
};
struct DataBody {
  Value value;
  bool raw = false;
};
struct IncludeBody {
  std::string file;
  std::shared_ptr<const Program> resolved;
};
struct FunctionBody {
  Params params;
  std::shared_ptr<const Program> body;
};
struct CallBody {
  TemplateExpr callee;
  NamedExprs args;
  std::optional<Program> pdl_context;
};
struct IfBody {
  TemplateExpr condition;
  Program then_branch;
  std::optional<Program> else_branch;
};
struct ForBody {
  NamedExprs bindings;
  Program body;
  JoinSpec join;
};
struct RepeatBody {
  Program body;
  TemplateExpr times;
  JoinSpec join;
};
struct RepeatUntilBody {
  Program body;
  TemplateExpr until;
  JoinSpec join;
};
struct CodeBody {
  Program source;
  std::string lang;
};
struct GetBody {
  std::string name;
};

using BlockBody = std::variant<ExprLeaf, ModelBody, ReadBody, TextBody, LastOfBody, ArrayBody, ObjectBody,
                               DataBody, IncludeBody, FunctionBody, CallBody, IfBody, ForBody, RepeatBody,
                               RepeatUntilBody, CodeBody, GetBody>;

struct SourceLocation {
  std::string path;  // JSON pointer into the document
  int line = 0;
  int column = 0;
};

struct Block {
  BlockBody body;
  std::optional<std::string> description;
  std::optional<std::string> def;
  NamedPrograms defs;
  std::optional<std::string> role;
  ContributeSet contribute;
  std::optional<ParserKind> parser;
  std::optional<TypeSpec> spec;
  SourceLocation location;

  Block() = default;
  explicit Block(BlockBody b) : body(std::move(b)) {}
};

inline Program Program::single(Block b) {
  Program p;
  p.blocks.push_back(std::move(b));
  return p;
}

inline Program Program::list(std::vector<Block> blocks) {
  Program p;
  p.blocks = std::move(blocks);
  p.is_list = true;
  return p;
}

/// "assistant" for model blocks, "user" for everything else.
std::string default_role(const BlockBody& body);

/// Short kind name used in traces and messages: "expr", "model", "read", ...
std::string kind_name(const BlockBody& body);

/// The program as a plain data tree in canonical source form. Feeding it
/// back to the parser yields the same AST.
Value program_to_value(const Program& program);
Value block_to_value(const Block& block);

}  // namespace pdl
