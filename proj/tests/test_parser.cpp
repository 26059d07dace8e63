#include <gtest/gtest.h>

#include <fstream>

#include "harness.hpp"
#include "pdl/error.hpp"
#include "pdl/eval.hpp"
#include "pdl/parser.hpp"
#include "pdl/refsem.hpp"
#include "pdl/yaml.hpp"

namespace pdl {
namespace {

using testing::fixture;
using testing::read_text;

Program parse_ok(const std::string& src) {
  ParseResult r = parse_program(src);
  if (!r.ok()) {
    std::string all;
    for (const auto& d : r.diagnostics) all += d.format("<src>") + "\n";
    throw std::runtime_error(all);
  }
  return *r.program;
}

std::vector<Diagnostic> errors_of(const std::string& src) {
  ParseResult r = parse_program(src);
  EXPECT_FALSE(r.ok()) << src;
  return r.diagnostics;
}

bool mentions(const std::vector<Diagnostic>& ds, const std::string& text, const std::string& path) {
  for (const auto& d : ds) {
    if (d.message.find(text) != std::string::npos && d.path_string() == path) return true;
  }
  return false;
}

TEST(Parse, ScalarDocument) {
  const Program p = parse_ok("\"hello\"");
  ASSERT_FALSE(p.is_list);
  const auto* leaf = std::get_if<ExprLeaf>(&p.blocks.at(0).body);
  ASSERT_NE(leaf, nullptr);
  EXPECT_EQ(leaf->expr.source(), Value("hello"));
}

TEST(Parse, ChatbotShape) {
  const Program p = parse_ok(read_text(fixture("chatbot/chatbot.pdl")));
  ASSERT_TRUE(p.is_list);
  ASSERT_EQ(p.blocks.size(), 2u);
  const auto* read = std::get_if<ReadBody>(&p.blocks[0].body);
  ASSERT_NE(read, nullptr);
  EXPECT_EQ(read->message->source(), Value("What is your query?\n"));
  EXPECT_EQ(p.blocks[0].contribute, (ContributeSet{false, true}));
  const auto* loop = std::get_if<RepeatUntilBody>(&p.blocks[1].body);
  ASSERT_NE(loop, nullptr);
  ASSERT_FALSE(loop->body.is_list);
  const auto* text = std::get_if<TextBody>(&loop->body.blocks.at(0).body);
  ASSERT_NE(text, nullptr);
  EXPECT_EQ(text->body.blocks.size(), 2u);
  EXPECT_EQ(loop->until.source(), Value("${ question == \"quit\" }"));
  EXPECT_TRUE(validate_meta_schema(parse_yaml(read_text(fixture("chatbot/chatbot.pdl")))).empty());
}

TEST(Parse, DataIgnoresKeywords) {
  const Program p = parse_ok("{data: {if: 1, model: [x]}}");
  const auto* d = std::get_if<DataBody>(&p.blocks.at(0).body);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(to_json(d->value), R"({"if": 1, "model": ["x"]})");
}

TEST(Parse, AmbiguousBlockKind) {
  const auto ds = errors_of("{model: m, read: null}");
  EXPECT_TRUE(mentions(ds, "ambiguous block kind: model, read", ""));
}

TEST(Parse, UnknownKeywordWithSuggestion) {
  const auto ds = errors_of("[a, {modle: granite}]");
  EXPECT_TRUE(mentions(ds, "unknown keyword 'modle' (did you mean 'model'?)", "/1/modle"));
}

TEST(Parse, BogusContributeDestination) {
  const auto ds = errors_of("{text: [a], contribute: [result, bogus]}");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_TRUE(mentions(ds, "unknown contribute destination", "/contribute/1"));
}

TEST(Parse, UntilMustBeScalar) {
  const auto ds = errors_of("{repeat: a, until: [x]}");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].path_string(), "/until");
}

TEST(Parse, IncompleteBlocks) {
  EXPECT_TRUE(mentions(errors_of("{repeat: a}"), "incomplete block", ""));
  EXPECT_TRUE(mentions(errors_of("[{if: true}]"), "missing 'then'", "/0"));
  EXPECT_TRUE(mentions(errors_of("{description: d}"), "block has no body keyword", ""));
}

TEST(Parse, TypeTypoInSpec) {
  EXPECT_TRUE(mentions(errors_of("{lastOf: [a], spec: strr}"), "did you mean 'str'?", "/spec"));
}

TEST(Parse, BadIdentifiersAndRoles) {
  EXPECT_TRUE(mentions(errors_of("{def: '1x', data: 1}"), "not a valid identifier", "/def"));
  EXPECT_TRUE(mentions(errors_of("{role: 7, data: 1}"), "expected string", "/role"));
  EXPECT_TRUE(mentions(errors_of("{defs: {'a b': x}, data: 1}"), "not a valid identifier", "/defs/a b"));
}

TEST(Parse, StatementTagsAreErrors) {
  EXPECT_TRUE(mentions(errors_of("{text: ['{% if x %}y{% endif %}']}"), "statement tags", "/text/0"));
}

TEST(Parse, YamlSyntaxErrorHasPosition) {
  const auto ds = errors_of("- a\n- b: [1,\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_NE(ds[0].message.find("YAML syntax error"), std::string::npos);
  EXPECT_GT(ds[0].line, 0);
}

TEST(Parse, DiagnosticsCarrySourcePositions) {
  const auto ds = errors_of("- a\n- text:\n  - b\n  contribute: [nowhere]\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].line, 4);
  EXPECT_EQ(ds[0].format("x.pdl").rfind("x.pdl:4:", 0), 0u) << ds[0].format("x.pdl");
}

TEST(Parse, MetaSchemaDrivesAcceptance) {
  const std::vector<std::string> docs = {
      "hello", "[]", "{data: 1}", "{model: m}", "{read: null, message: hi}", "{model: m, read: null}",
      "{modle: m}", "{text: [a], contribute: [context]}", "{for: {x: '${[1]}'}, repeat: a, join: {as: text, with: ','}}",
      "{repeat: a, num_iterations: 2}", "{function: {x: str}, return: a}", "{call: '${f}', args: {x: 1}}",
      "{lang: python, code: x}", "{code: x}", "{get: x}", "{include: f.pdl}", "{object: {a: x}}",
      "{array: [a]}", "{lastOf: [a], parser: {regex: 'a+'}}", "{lastOf: a, parser: xml}"};
  for (const auto& doc : docs) {
    const Value tree = parse_yaml(doc);
    EXPECT_EQ(validate_meta_schema(tree).empty(), parse_program(doc).ok()) << doc;
  }
}

TEST(Desugar, IfThenListBecomesLastOf) {
  const Program p = parse_ok("{if: '${true}', then: [a, b]}");
  const auto& branch = std::get<IfBody>(p.blocks.at(0).body).then_branch;
  ASSERT_FALSE(branch.is_list);
  const Block& wrapper = branch.blocks.at(0);
  ASSERT_TRUE(std::holds_alternative<LastOfBody>(wrapper.body));
  EXPECT_EQ(std::get<LastOfBody>(wrapper.body).body.blocks.size(), 2u);
  EXPECT_EQ(wrapper.location.path, "/then");
}

TEST(Desugar, ShorthandSpecExpanded) {
  const Program p = parse_ok("{lastOf: a, spec: '[str]'}");
  const auto& spec = p.blocks.at(0).spec;
  ASSERT_TRUE(spec.has_value());
  EXPECT_EQ(spec->kind, TypeSpec::Kind::Array);
  EXPECT_EQ(spec->items->kind, TypeSpec::Kind::Str);
}

TEST(Desugar, Idempotent) {
  for (const char* f : {"chatbot/chatbot.pdl", "react/react.pdl", "rag/rag.pdl", "pal/pal.pdl"}) {
    const Program p = parse_ok(read_text(fixture(f)));
    EXPECT_EQ(program_to_value(desugar(p)), program_to_value(p)) << f;
    EXPECT_EQ(program_to_value(desugar(desugar(p))), program_to_value(desugar(p))) << f;
  }
}

TEST(RoundTrip, SerializeThenParseIsIdentity) {
  for (const char* f : {"chatbot/chatbot.pdl", "react/react.pdl", "rag/rag.pdl", "pal/pal.pdl", "include/main.pdl"}) {
    const Program p = parse_ok(read_text(fixture(f)));
    const std::string text = serialize_program(p);
    const Program back = parse_ok(text);
    EXPECT_EQ(program_to_value(back), program_to_value(p)) << f << "\n" << text;
    EXPECT_EQ(serialize_program(back), text) << f;
  }
}

TEST(RoundTrip, GeneratedPrograms) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Program p = refsem::gen_fragment_program(seed, 40);
    const std::string text = serialize_program(p);
    const Program back = parse_ok(text);
    ASSERT_EQ(program_to_value(back), program_to_value(p)) << "seed " << seed << "\n" << text;
  }
}

TEST(RoundTrip, AllBlockKinds) {
  const std::string src = R"(
description: every kind
defs:
  t:
    function: {x: str, y: {optional: int}}
    return: ${x}
lastOf:
- model: m
  input: [a, b]
  parameters: {stop: ["\n"], temperature: 0}
- {read: null, message: "q?", multiline: true}
- {read: data.txt}
- text: [a, "${1}"]
- array: [a]
- object: {k: v, l: [1, 2]}
- object: [{data: {a: 1}}]
- {data: "${x}", raw: true}
- include: other.pdl
- call: ${t}
  args: {x: hi}
  pdl_context: [c]
- {if: "${true}", then: a, else: [b, c]}
- for: {x: "${[1, 2]}"}
  repeat: "${x}"
  join: {as: text, with: ", "}
- {repeat: a, num_iterations: 2, join: {as: array}}
- {repeat: a, until: "${true}"}
- {lang: expr, code: "1 + 1", def: n, role: system, contribute: [result]}
- {get: n, parser: {regex: '(?P<d>\d)'}, spec: {d: str}}
- "\\${literal}"
)";
  const Program p = parse_ok(src);
  const std::string text = serialize_program(p);
  EXPECT_EQ(program_to_value(parse_ok(text)), program_to_value(p)) << text;
}

TEST(Include, SplicesBlocksLikeManualInlining) {
  const Program included = load_program_file(fixture("include/main.pdl"));
  const auto* inc = std::get_if<IncludeBody>(&included.blocks.at(0).body);
  ASSERT_NE(inc, nullptr);
  ASSERT_TRUE(inc->resolved);
  EXPECT_EQ(program_to_value(*inc->resolved), program_to_value(load_program_file(fixture("include/instructions.pdl"))));

  auto final_context = [](const Program& p) {
    Runtime rt;
    const Environment env = initial_environment({}, {{"query", Value("Reverse a string.")}});
    const TopLevelResult r = Interpreter(rt).run_top_level(env, p);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& m : r.context.messages) out.emplace_back(m.role, m.content);
    return out;
  };
  const auto spliced = final_context(included);
  EXPECT_EQ(spliced, final_context(load_program_file(fixture("include/inlined.pdl"))));
  ASSERT_EQ(spliced.size(), 3u);
  EXPECT_EQ(spliced[2].second, "Q: Reverse a string.\nA:");
}

TEST(Include, ScalarFile) {
  const auto dir = std::filesystem::temp_directory_path() / "pdl_include_scalar";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "x.pdl") << "\"x\"\n";
    std::ofstream(dir / "main.pdl") << "include: x.pdl\n";
  }
  const Program p = load_program_file(dir / "main.pdl");
  const auto& inc = std::get<IncludeBody>(p.blocks.at(0).body);
  ASSERT_TRUE(inc.resolved);
  const auto* leaf = std::get_if<ExprLeaf>(&inc.resolved->blocks.at(0).body);
  ASSERT_NE(leaf, nullptr);
  EXPECT_EQ(leaf->expr.source(), Value("x"));
  std::filesystem::remove_all(dir);
}

TEST(Include, CycleIsReported) {
  try {
    load_program_file(fixture("include/cycle_a.pdl"));
    FAIL();
  } catch (const ProgramError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("include cycle"), std::string::npos) << msg;
    EXPECT_NE(msg.find("cycle_a.pdl"), std::string::npos) << msg;
    EXPECT_NE(msg.find("cycle_b.pdl"), std::string::npos) << msg;
  }
}

TEST(Include, MissingFileNamesBothPaths) {
  try {
    load_program_file(fixture("include/missing.pdl"));
    FAIL();
  } catch (const ProgramError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nowhere.pdl"), std::string::npos) << msg;
    EXPECT_NE(msg.find("missing.pdl"), std::string::npos) << msg;
  }
}

}  // namespace
}  // namespace pdl
