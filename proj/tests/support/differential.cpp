#include "differential.hpp"

#include "pdl/eval.hpp"
#include "pdl/expr.hpp"
#include "pdl/refsem.hpp"

namespace pdl::testing {

namespace {

class FragmentBackend final : public ModelBackend {
 public:
  std::string generate(const ModelRequest& request, const ChunkCallback&) override {
    std::string prompt;
    for (const auto& m : request.messages) prompt += m.content;
    return refsem::fragment_model(prompt);
  }
};

std::string show(const Value& v) {
  if (v.is_closure()) return "<closure>";
  try {
    return to_json(v);
  } catch (const std::exception&) {
    return "<value with closure>";
  }
}

}  // namespace

Verdict differential_check(const Program& program, const std::string& context) {
  refsem::Oracles oracles;
  oracles.model = refsem::fragment_model;
  oracles.code = [](const std::string& lang, const std::string& source) -> Value {
    if (lang != "expr") throw Error("no runner for " + lang);
    return expr::evaluate(*expr::parse(source), expr::EmptyScope());
  };
  oracles.max_iterations = 10000;

  std::optional<refsem::RefResult> expected;
  std::string ref_error;
  try {
    expected = refsem::ref_eval_program(refsem::empty_env(context), program, oracles);
  } catch (const refsem::Unsupported& e) {
    return {Verdict::Kind::Unsupported, e.what()};
  } catch (const std::exception& e) {
    ref_error = e.what();
  }

  Runtime rt;
  rt.models.add("*", std::make_shared<FragmentBackend>());
  rt.runners.add("expr", std::make_shared<ExprRunner>());
  rt.options.until_polarity = UntilPolarity::Appendix;
  rt.options.max_iterations = 10000;
  std::optional<EvalOutcome> actual;
  std::string eval_error;
  try {
    std::vector<Message> ctx;
    if (!context.empty()) ctx.push_back({"user", context});
    actual = Interpreter(rt).eval_program(initial_environment(ctx), program);
  } catch (const std::exception& e) {
    eval_error = e.what();
  }

  if (!expected && !actual) return {Verdict::Kind::BothError, ref_error + " | " + eval_error};
  if (!expected) return {Verdict::Kind::Disagree, "oracle failed: " + ref_error};
  if (!actual) return {Verdict::Kind::Disagree, "interpreter failed: " + eval_error};

  if (!(expected->value == actual->value)) {
    return {Verdict::Kind::Disagree, "value: oracle " + show(expected->value) + " vs " + show(actual->value)};
  }
  const std::string s = flatten(actual->contribution);
  if (expected->str != s) return {Verdict::Kind::Disagree, "contribution: oracle \"" + expected->str + "\" vs \"" + s + "\""};

  std::vector<std::string> ref_names;
  for (const auto& [name, _] : expected->env) ref_names.push_back(name);
  if (ref_names != actual->env.names()) return {Verdict::Kind::Disagree, "environment names differ"};
  for (const auto& [name, binding] : expected->env) {
    const Binding* b = actual->env.lookup(name);
    if (!(b->value == binding.first)) {
      return {Verdict::Kind::Disagree, "binding " + name + ": oracle " + show(binding.first) + " vs " + show(b->value)};
    }
    if (flatten(b->contribution) != binding.second) {
      return {Verdict::Kind::Disagree, "binding " + name + " contribution: oracle \"" + binding.second + "\" vs \"" +
                                           flatten(b->contribution) + "\""};
    }
  }
  return {};
}

}  // namespace pdl::testing
