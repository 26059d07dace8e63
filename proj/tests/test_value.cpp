#include <gtest/gtest.h>

#include "pdl/context.hpp"
#include "pdl/environment.hpp"
#include "pdl/error.hpp"
#include "pdl/value.hpp"

namespace pdl {
namespace {

TEST(Value, ObjectKeepsInsertionOrder) {
  Object o;
  o.set("z", 1);
  o.set("a", 2);
  o.set("z", 3);
  EXPECT_EQ(to_json(Value(o)), R"({"z": 3, "a": 2})");
  EXPECT_EQ(to_json(parse_json(R"({"b": 1, "a": {"d": 2, "c": 3}})")), R"({"b": 1, "a": {"d": 2, "c": 3}})");
}

TEST(Value, IntegersExactTo2Pow53AndBeyond) {
  EXPECT_EQ(to_json(parse_json("9007199254740993")), "9007199254740993");
  EXPECT_TRUE(parse_json("9007199254740993").is_int());
  EXPECT_TRUE(parse_json("1.0").is_float());
  EXPECT_EQ(to_json(parse_json("1.0")), "1.0");
}

TEST(Value, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2.0");
  EXPECT_EQ(format_number(1e21), "1e+21");
  EXPECT_EQ(format_number(-1.5e-7), "-1.5e-07");
}

TEST(Value, DeepEqualityTreatsIntAndFloatAlike) {
  EXPECT_EQ(Value(2), Value(2.0));
  EXPECT_EQ(parse_json("[1, {\"a\": null}]"), parse_json("[1.0, {\"a\": null}]"));
  EXPECT_FALSE(parse_json("{\"a\": 1, \"b\": 2}") == parse_json("{\"b\": 2, \"a\": 1}"));
  EXPECT_FALSE(Value("1") == Value(1));
}

TEST(Value, StringEscapes) {
  EXPECT_EQ(to_json(Value("a\"b\\c\n\x01")), R"("a\"b\\c\n\u0001")");
  EXPECT_EQ(parse_json(R"("é😀")").as_string(), "é😀");
}

TEST(Value, ParseErrorsCarryOffset) {
  try {
    parse_json("[1, 2");
    FAIL();
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_json("[1] x"), ValueError);
}

class NullClosure final : public ClosureBase {
 public:
  std::vector<std::string> param_names() const override { return {}; }
  const void* body_identity() const override { return this; }
  std::vector<std::pair<std::string, Value>> captured_values() const override { return {}; }
};

TEST(Value, ClosuresDoNotSerialize) {
  const Value c(ClosurePtr(std::make_shared<NullClosure>()));
  EXPECT_THROW(to_json(c), ValueError);
  EXPECT_THROW(to_json(Value(Array{Value(1), c})), ValueError);
  EXPECT_STREQ(c.type_name(), "function");
}

TEST(Context, FlattenConcatenates) {
  EXPECT_EQ(flatten(Contribution{}), "");
  Contribution c;
  c.messages = {{"user", "ab"}, {"assistant", "c"}};
  EXPECT_EQ(flatten(c), "abc");
  Contribution turn;
  turn.messages = {{"user", "What is your query?\n"}, {"user", "What's a language salad?"}};
  EXPECT_EQ(flatten(turn), "What is your query?\nWhat's a language salad?");
}

TEST(Context, FlattenIsAMonoidHomomorphism) {
  Contribution a;
  a.messages = {{"user", "x"}, {"system", ""}};
  Contribution b;
  b.messages = {{"assistant", "yz"}};
  Contribution ab = a;
  ab.messages.insert(ab.messages.end(), b.messages.begin(), b.messages.end());
  EXPECT_EQ(flatten(ab), flatten(a) + flatten(b));
}

TEST(Environment, BindIsFunctional) {
  const Environment e0;
  Contribution hi;
  hi.messages = {{"user", "hi"}};
  const Environment e1 = e0.bind("x", Value("hi"), hi);
  const Environment e2 = e1.bind("y", Value(1), {});
  EXPECT_EQ(e0.lookup("x"), nullptr);
  ASSERT_NE(e1.lookup("x"), nullptr);
  EXPECT_EQ(e1.lookup("x")->value, Value("hi"));
  EXPECT_EQ(flatten(e2.lookup("x")->contribution), "hi");
  EXPECT_EQ(e1.lookup("y"), nullptr);
  EXPECT_EQ(e2.names(), (std::vector<std::string>{"context", "x", "y"}));
}

TEST(Environment, ContextValueTracksMessages) {
  const Environment e0;
  ASSERT_NE(e0.lookup("context"), nullptr);
  EXPECT_EQ(e0.lookup("context")->value, Value(""));
  Contribution c;
  c.messages = {{"user", "a"}, {"assistant", "b"}};
  const Environment e1 = e0.with_context(c);
  EXPECT_EQ(e1.lookup("context")->value, Value("ab"));
  EXPECT_EQ(e1.context().messages.size(), 2u);
}

}  // namespace
}  // namespace pdl
