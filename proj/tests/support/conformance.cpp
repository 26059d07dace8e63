#include "conformance.hpp"

#include "differential.hpp"
#include "pdl/error.hpp"
#include "pdl/eval.hpp"
#include "pdl/parser.hpp"

namespace pdl::testing {

namespace {

class BracketBackend final : public ModelBackend {
 public:
  std::string generate(const ModelRequest& request, const ChunkCallback&) override {
    std::string prompt;
    for (const auto& m : request.messages) prompt += m.content;
    return "[" + prompt + "]";
  }
};

}  // namespace

const std::vector<ConformanceCase>& conformance_cases() {
  static const std::vector<ConformanceCase> cases = {
      {"string", R"("hello")", "", R"("hello")", "hello", {}, {}},
      {"block (contribute context)", "{def: x, data: hi}", "", R"("hi")", "hi", {{"x", R"("hi")", "hi"}}, {}},
      {"block (exclude context)", "{def: x, data: hi, contribute: [result]}", "", R"("hi")", "", {{"x", R"("hi")", "hi"}},
       {}},
      {"defs empty", "{defs: {}, data: a}", "", R"("a")", "a", {}, {}},
      {"defs cons", "{defs: {a: p, b: '${a}q'}, data: '${b}'}", "", R"("pq")", "pq",
       {{"a", R"("p")", "p"}, {"b", R"("pq")", "pq"}}, {}},
      {"empty array", "[]", "", "[]", "", {}, {}},
      {"singleton", "[x]", "", R"(["x"])", "x", {}, {}},
      {"cons", "[a, '${context}', '${context}']", "c", R"(["a", "ca", "caca"])", "acacaca", {{"context", R"("caca")", "caca"}},
       {}},
      {"model", "{model: m, input: [{def: y, data: q}, r]}", "", R"("[qr]")", "[qr]", {}, {"y"}},
      {"code", "{lang: expr, code: [{def: y, data: '1 +'}, ' 2']}", "", "3", "3", {}, {"y"}},
      {"get", "[{def: x, lastOf: [ab, {data: {a: 1}}]}, {get: x}]", "", R"([{"a": 1}, {"a": 1}])",
       R"(ab{"a": 1}ab{"a": 1})", {{"x", R"({"a": 1})", R"(ab{"a": 1})"}}, {}},
      {"data", "{data: {a: '${1 + 1}', b: [true, '${context}']}}", "k", R"({"a": 2, "b": [true, "k"]})",
       R"({"a": 2, "b": [true, "k"]})", {}, {}},
      {"lastOf", "{lastOf: [a, b]}", "", R"("b")", "ab", {}, {}},
      {"if true", "{if: '${1 < 2}', then: a, else: b}", "", R"("a")", "a", {}, {}},
      {"if false", "{if: '${2 < 1}', then: a, else: b}", "", R"("b")", "b", {}, {}},
      {"repeat n > 1", "{repeat: ['${context | length}'], num_iterations: 3}", "", "2", "2", {{"context", R"("01")", "01"}},
       {}},
      {"repeat n <= 1", "{repeat: x, num_iterations: 1}", "", R"("x")", "x", {}, {}},
      {"repeat-until true", "{repeat: [z], until: '${(context | length) < 3}'}", "", R"("z")", "z",
       {{"context", R"("zzz")", "zzz"}}, {}},
      {"repeat-until false", "{repeat: [z, '${context}'], until: '${false}'}", "w", R"("wz")", "zwz", {}, {}},
      {"function", "{def: f, function: {x: null}, return: '${x}!'}", "", "<function>", "", {}, {}},
      {"call", R"({defs: {f: {function: {x: null}, return: {lastOf: [{def: g, data: '${x}'}, '${g}!${context}']}}},
                   call: '${f}', args: {x: hi}})",
       "c", R"("hi!chi")", "hihi!chi", {}, {"g", "x"}},
  };
  return cases;
}

ConformanceResult run_conformance_case(const ConformanceCase& c) {
  ConformanceResult r{c.rule, false, ""};
  ParseResult parsed = parse_program(c.source);
  if (!parsed.ok()) {
    r.detail = "parse error: " + parsed.diagnostics.front().message;
    return r;
  }
  const Verdict v = differential_check(*parsed.program, c.context);
  if (v.kind != Verdict::Kind::Agree) {
    r.detail = "oracle: " + v.detail;
    return r;
  }

  Runtime rt;
  rt.models.add("*", std::make_shared<BracketBackend>());
  rt.runners.add("expr", std::make_shared<ExprRunner>());
  rt.options.until_polarity = UntilPolarity::Appendix;
  std::vector<Message> ctx;
  if (!c.context.empty()) ctx.push_back({"user", c.context});
  try {
    const EvalOutcome o = Interpreter(rt).eval_program(initial_environment(ctx), *parsed.program);
    const std::string value = o.value.is_closure() ? "<function>" : to_json(o.value);
    if (value != c.value_json) {
      r.detail = "value " + value + ", expected " + c.value_json;
      return r;
    }
    if (flatten(o.contribution) != c.contribution) {
      r.detail = "contribution \"" + flatten(o.contribution) + "\", expected \"" + c.contribution + "\"";
      return r;
    }
    for (const auto& b : c.bindings) {
      const Binding* got = o.env.lookup(b.name);
      if (!got) {
        r.detail = b.name + " unbound";
        return r;
      }
      if (to_json(got->value) != b.value_json || flatten(got->contribution) != b.contribution) {
        r.detail = b.name + " bound to (" + to_json(got->value) + ", \"" + flatten(got->contribution) + "\")";
        return r;
      }
    }
    for (const auto& name : c.unbound) {
      if (o.env.lookup(name)) {
        r.detail = name + " should be unbound";
        return r;
      }
    }
  } catch (const std::exception& e) {
    r.detail = e.what();
    return r;
  }
  r.pass = true;
  return r;
}

}  // namespace pdl::testing
