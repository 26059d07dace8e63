#include <gtest/gtest.h>

#include <map>

#include "pdl/error.hpp"
#include "pdl/expr.hpp"

namespace pdl {
namespace {

class MapScope final : public expr::Scope {
 public:
  MapScope(std::initializer_list<std::pair<const std::string, Value>> vars) : vars_(vars) {}
  const Value* lookup(std::string_view name) const override {
    auto it = vars_.find(std::string(name));
    return it == vars_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, Value> vars_;
};

Value eval(const std::string& source, const expr::Scope& scope = expr::EmptyScope()) {
  return TemplateExpr::parse(Value(source)).evaluate(scope);
}

std::string eval_json(const std::string& source, const expr::Scope& scope = expr::EmptyScope()) {
  return to_json(eval(source, scope));
}

TEST(TemplateExpr, Kinds) {
  EXPECT_EQ(TemplateExpr::parse(Value("plain")).kind(), TemplateExpr::Kind::Literal);
  EXPECT_EQ(TemplateExpr::parse(Value(42)).kind(), TemplateExpr::Kind::Literal);
  EXPECT_EQ(TemplateExpr::parse(Value("${ x }")).kind(), TemplateExpr::Kind::Pure);
  EXPECT_EQ(TemplateExpr::parse(Value("a ${ x }")).kind(), TemplateExpr::Kind::Interpolation);
}

TEST(TemplateExpr, LiteralPassthrough) {
  EXPECT_EQ(TemplateExpr::parse(Value(42)).evaluate(expr::EmptyScope()), Value(42));
  EXPECT_EQ(eval("no templates here"), Value("no templates here"));
}

TEST(TemplateExpr, ChatbotCondition) {
  EXPECT_EQ(eval(R"(${question == "quit"})", MapScope{{"question", Value("quit")}}), Value(true));
  EXPECT_EQ(eval(R"(${ question == "quit" })", MapScope{{"question", Value("exit")}}), Value(false));
}

TEST(TemplateExpr, ReActFieldAccess) {
  const MapScope scope{{"action", parse_json(R"({"name": "Search", "arguments": {"topic": "Henry Hudson"}})")}};
  EXPECT_EQ(eval("${ action.arguments.topic }", scope), Value("Henry Hudson"));
  EXPECT_EQ(eval("${ action['arguments']['topic'] }", scope), Value("Henry Hudson"));
  EXPECT_EQ(eval("Act: ${ action }", scope), Value(R"(Act: {"name": "Search", "arguments": {"topic": "Henry Hudson"}})"));
}

TEST(TemplateExpr, PureKeepsTypeInterpolationMakesString) {
  EXPECT_EQ(eval("${ 1 + 1 }"), Value(2));
  EXPECT_EQ(eval("n=${ 1 + 1 }"), Value("n=2"));
  EXPECT_EQ(eval_json("${ [1, 'a', none] }"), R"([1, "a", null])");
  EXPECT_EQ(eval("${ x } and ${ y }", MapScope{{"x", Value(true)}, {"y", Value()}}), Value("true and "));
}

TEST(TemplateExpr, EscapedDollarBrace) {
  EXPECT_EQ(eval(R"(cost \${x})"), Value("cost ${x}"));
}

TEST(TemplateExpr, StatementTagsRejected) {
  EXPECT_THROW(TemplateExpr::parse(Value("{% for x in y %}")), ExprError);
  EXPECT_THROW(TemplateExpr::parse(Value("${ 1 + }")), ExprError);
  EXPECT_THROW(TemplateExpr::parse(Value("${ 1")), ExprError);
}

TEST(Expr, Arithmetic) {
  EXPECT_EQ(eval("${ 7 // 2 }"), Value(3));
  EXPECT_EQ(eval("${ -7 // 2 }"), Value(-4));
  EXPECT_EQ(eval("${ 7 % 3 }"), Value(1));
  EXPECT_EQ(eval("${ -7 % 3 }"), Value(2));
  EXPECT_EQ(eval("${ 7 / 2 }"), Value(3.5));
  EXPECT_EQ(eval("${ 2 * (3 + 4) - 1 }"), Value(13));
  EXPECT_EQ(eval("${ 'ab' + 'cd' }"), Value("abcd"));
  EXPECT_EQ(eval_json("${ [1] + [2] }"), "[1, 2]");
  EXPECT_THROW(eval("${ 1 / 0 }"), ExprError);
}

TEST(Expr, ComparisonsAndLogic) {
  EXPECT_EQ(eval("${ 1 < 2 and not (3 <= 2) }"), Value(true));
  EXPECT_EQ(eval("${ 'a' in 'cat' }"), Value(true));
  EXPECT_EQ(eval("${ 2 in [1, 2] }"), Value(true));
  EXPECT_EQ(eval("${ 'k' in {'k': 1} }"), Value(true));
  EXPECT_EQ(eval("${ 0 or 'x' }"), Value("x"));
  EXPECT_EQ(eval("${ 'y' if 1 > 2 else 'n' }"), Value("n"));
  EXPECT_EQ(eval("${ [1, 2] == [1, 2] }"), Value(true));
}

TEST(Expr, IndexingAndLiterals) {
  const MapScope scope{{"xs", parse_json("[10, 20, 30]")}};
  EXPECT_EQ(eval("${ xs[1] }", scope), Value(20));
  EXPECT_EQ(eval("${ xs[-1] }", scope), Value(30));
  EXPECT_EQ(eval_json("${ {'a': xs[0], 'b': [true, false]} }", scope), R"({"a": 10, "b": [true, false]})");
  EXPECT_THROW(eval("${ xs[3] }", scope), ExprError);
}

TEST(Expr, Filters) {
  const MapScope scope{{"xs", parse_json(R"(["a", "b"])")}, {"s", Value("  Hi There ")}};
  EXPECT_EQ(eval("${ xs | length }", scope), Value(2));
  EXPECT_EQ(eval("${ s | length }", scope), Value(11));
  EXPECT_EQ(eval("${ xs | join(', ') }", scope), Value("a, b"));
  EXPECT_EQ(eval("${ s | trim | lower }", scope), Value("hi there"));
  EXPECT_EQ(eval("${ s | upper }", scope), Value("  HI THERE "));
  EXPECT_EQ(eval("${ xs | tojson }", scope), Value(R"(["a", "b"])"));
  EXPECT_EQ(eval("${ missing | default('d') }", scope), Value("d"));
  EXPECT_EQ(expr::filter_names().size(), 7u);
}

TEST(Expr, Errors) {
  try {
    eval("${ nope }");
    FAIL();
  } catch (const ExprError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos) << e.what();
  }
  try {
    eval("${ 1 + {} }");
    FAIL();
  } catch (const ExprError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("integer"), std::string::npos) << msg;
    EXPECT_NE(msg.find("object"), std::string::npos) << msg;
  }
  EXPECT_THROW(eval("${ [1] | bogus }"), ExprError);
}

TEST(Truthiness, Table) {
  for (const char* falsy : {"${ false }", "${ none }", "${ 0 }", "${ 0.0 }", "${ '' }", "${ [] }", "${ {} }"}) {
    EXPECT_FALSE(eval_condition(expr::EmptyScope(), TemplateExpr::parse(Value(falsy)))) << falsy;
  }
  for (const char* truthy : {"${ true }", "${ 1 }", "${ 'x' }", "${ [0] }", "${ 1 < 2 }"}) {
    EXPECT_TRUE(eval_condition(expr::EmptyScope(), TemplateExpr::parse(Value(truthy)))) << truthy;
  }
}

TEST(Stringify, Forms) {
  EXPECT_EQ(stringify(Value("abc")), "abc");
  EXPECT_EQ(stringify(Value()), "");
  EXPECT_EQ(stringify(Value(true)), "true");
  EXPECT_EQ(stringify(Value(1565)), "1565");
  EXPECT_EQ(stringify(Value(2.5)), "2.5");
  EXPECT_EQ(stringify(parse_json(R"({"name":"Search"})")), R"({"name": "Search"})");
  EXPECT_EQ(stringify(parse_json(R"([1,"a"])")), R"([1, "a"])");
}

TEST(Expr, EvaluationIsPure) {
  const MapScope scope{{"x", parse_json("[3, 1, 2]")}};
  const Value before = *scope.lookup("x");
  eval("${ x | length } ${ x + [4] } ${ x | tojson }", scope);
  EXPECT_EQ(*scope.lookup("x"), before);
}

}  // namespace
}  // namespace pdl
