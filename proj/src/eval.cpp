#include "pdl/eval.hpp"

#include <fstream>
#include <sstream>

#include "pdl/error.hpp"
#include "pdl/expr.hpp"
#include "pdl/parser.hpp"
#include "pdl/typecheck.hpp"

namespace pdl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// A message, or nothing when the content is empty.
Contribution message(const std::string& role, std::string content) {
  if (content.empty()) return {};
  return Contribution::single(role, std::move(content));
}

class InterpClosure final : public ClosureBase {
 public:
  InterpClosure(Environment captured, const FunctionBody& fn) : captured_(std::move(captured)), fn_(fn) {}

  std::vector<std::string> param_names() const override {
    std::vector<std::string> out;
    for (const auto& [name, _] : fn_.params) out.push_back(name);
    return out;
  }
  const void* body_identity() const override { return fn_.body.get(); }
  std::vector<std::pair<std::string, Value>> captured_values() const override {
    std::vector<std::pair<std::string, Value>> out;
    for (const auto& name : captured_.names()) out.emplace_back(name, captured_.lookup(name)->value);
    return out;
  }

  const Environment& captured() const { return captured_; }
  const FunctionBody& function() const { return fn_; }

 private:
  Environment captured_;
  // Copied so the closure stays valid independently of the AST node.
  FunctionBody fn_;
};

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_values(const std::vector<Value>& values, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += stringify(values[i]);
  }
  return out;
}

/// Runs a PDL program given as text in a fresh interpreter that shares
/// the enclosing runtime's services.
class PdlRunner final : public CodeRunner {
 public:
  explicit PdlRunner(Runtime& rt) : rt_(rt) {}
  Value run(const std::string& source, Session&) override {
    ParseResult parsed = parse_program(source);
    if (!parsed.ok()) {
      std::string msg = "generated program is invalid";
      for (const auto& d : parsed.diagnostics) msg += "; " + d.format("<generated>");
      throw BackendError(msg);
    }
    std::vector<std::filesystem::path> stack;
    const Program program = resolve_includes(*parsed.program, rt_.options.base_dir, stack);
    Interpreter nested(rt_);
    return nested.run_top_level(Environment(), program).value;
  }

 private:
  Runtime& rt_;
};

}  // namespace

std::optional<std::string> StreamInput::read_line() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::optional<std::string> StreamInput::read_all() {
  std::ostringstream ss;
  ss << in_.rdbuf();
  std::string s = ss.str();
  if (s.empty()) return std::nullopt;
  return s;
}

std::optional<std::string> ScriptedInput::read_line() {
  if (lines_.empty()) return std::nullopt;
  std::string line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

std::optional<std::string> ScriptedInput::read_all() {
  if (lines_.empty()) return std::nullopt;
  std::string out;
  for (const auto& l : lines_) out += l + "\n";
  lines_.clear();
  return out;
}

void Runtime::add_builtin_runners() {
  runners.add("expr", std::make_shared<ExprRunner>());
  runners.add("pdl", std::make_shared<PdlRunner>(*this));
}

const Value* EnvScope::lookup(std::string_view name) const {
  const Binding* b = env_.lookup(name);
  return b ? &b->value : nullptr;
}

Value expand_templates(const Value& tree, const expr::Scope& scope) {
  if (tree.is_string()) return TemplateExpr::parse(tree).evaluate(scope);
  if (tree.is_array()) {
    Array out;
    for (const auto& v : tree.as_array()) out.push_back(expand_templates(v, scope));
    return Value(std::move(out));
  }
  if (tree.is_object()) {
    Object out;
    for (const auto& [k, v] : tree.as_object()) out.set(k, expand_templates(v, scope));
    return Value(std::move(out));
  }
  return tree;
}

Environment initial_environment(const std::vector<Message>& context,
                                const std::vector<std::pair<std::string, Value>>& bindings) {
  Environment env = Environment().with_context(Contribution(context));
  for (const auto& [name, value] : bindings) env = env.bind(name, value, message("user", stringify(value)));
  return env;
}

/// Keeps the trace stack balanced when a block exits by exception.
struct Interpreter::Frame {
  TraceRecorder* trace;
  TraceNode* node = nullptr;
  bool closed = false;

  Frame(TraceRecorder* t, const Block& block, const std::string& role) : trace(t) {
    if (trace) node = &trace->enter(kind_name(block.body), block.location.path, role);
  }
  void close(const EvalOutcome& out) {
    if (!trace) return;
    const std::string flat = flatten(out.contribution);
    trace->leave(&out.value, &flat, nullptr);
    closed = true;
  }
  void fail(const std::string& message) {
    if (!trace || closed) return;
    trace->leave(nullptr, nullptr, &message);
    closed = true;
  }
  ~Frame() {
    if (trace && !closed) trace->leave(nullptr, nullptr, nullptr);
  }
};

EvalOutcome Interpreter::eval_program(const Environment& env, const Program& program,
                                      const std::optional<std::string>& role) {
  if (!program.is_list) return eval_block(env, program.blocks.front(), role);
  std::vector<Value> values;
  EvalOutcome out = eval_list(env, program.blocks, role, &values);
  out.value = Value(Array(std::move(values)));
  return out;
}

EvalOutcome Interpreter::eval_list(const Environment& env, const std::vector<Block>& blocks,
                                   const std::optional<std::string>& role, std::vector<Value>* values) {
  EvalOutcome out{env, Value(), {}, {}};
  Environment cur = env;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    EvalOutcome step = eval_block(cur, blocks[i], role);
    if (values) values->push_back(step.value);
    out.contribution.append(step.contribution);
    out.value = step.value;
    if (i + 1 < blocks.size()) {
      cur = step.env.with_context(cur.context() + step.contribution);
    } else {
      out.env = std::move(step.env);
      out.pending = std::move(step.pending);
    }
  }
  return out;
}

EvalOutcome Interpreter::eval_block(const Environment& env, const Block& block,
                                    const std::optional<std::string>& inherited) {
  const std::optional<std::string> explicit_role = block.role ? block.role : inherited;
  const std::string role = explicit_role ? *explicit_role : default_role(block.body);
  Frame frame(rt_.trace, block, role);
  try {
    Environment cur = env;
    for (const auto& [name, p] : block.defs) {
      EvalOutcome d = eval_program(cur, p, explicit_role);
      cur = cur.bind(name, d.value, d.contribution);
      if (frame.node) frame.node->defs_bound.push_back(name);
    }
    EvalOutcome out = eval_body(cur, block, role, explicit_role);
    if (block.parser) {
      if (frame.node) {
        frame.node->parser = block.parser->kind == ParserKind::Kind::Regex ? "regex" : [&] {
          switch (block.parser->kind) {
            case ParserKind::Kind::Json: return std::string("json");
            case ParserKind::Kind::Yaml: return std::string("yaml");
            default: return std::string("jsonl");
          }
        }();
      }
      const std::string raw = out.value.is_string() ? out.value.as_string() : stringify(out.value);
      try {
        out.value = apply_parser(*block.parser, raw);
      } catch (const ValueError& e) {
        throw EvalError(block.location.path, std::string("parser error: ") + e.what());
      }
    }
    if (block.spec) {
      if (frame.node) frame.node->spec = describe(*block.spec);
      if (auto mismatch = check_spec(out.value, *block.spec)) {
        throw EvalError(block.location.path, mismatch->message());
      }
    }
    if (block.def) {
      if (frame.node) frame.node->def = *block.def;
      out.env = out.env.bind(*block.def, out.value, out.contribution);
    }
    if (!block.contribute.context) {
      out.contribution = {};
      out.pending = {};
    }
    if (!block.contribute.result) out.value = Value("");
    frame.close(out);
    return out;
  } catch (const EvalError& e) {
    frame.fail(e.cause());
    throw;
  } catch (const Error& e) {
    frame.fail(e.what());
    throw EvalError(block.location.path, e.what());
  }
}

EvalOutcome Interpreter::eval_body(const Environment& env, const Block& block, const std::string& role,
                                   const std::optional<std::string>& inherited) {
  const EnvScope scope(env);
  auto leaf = [&](Value v) {
    Contribution c = message(role, stringify(v));
    return EvalOutcome{env, std::move(v), c, c};
  };
  // Per-iteration values are only kept when the join needs them.
  struct Iterations {
    bool keep_values;
    std::vector<Value> values;
    std::optional<EvalOutcome> last;
    void add(EvalOutcome o) {
      if (keep_values) values.push_back(o.value);
      last = std::move(o);
    }
  };
  auto join = [&](const JoinSpec& spec, Iterations& its, const Environment& start) {
    if (!its.last) {
      Value v = spec.as == JoinSpec::As::Array ? Value(Array{}) : Value("");
      return EvalOutcome{start, v, {}, {}};
    }
    EvalOutcome last = std::move(*its.last);
    if (spec.as == JoinSpec::As::LastOf) return last;
    Value v = spec.as == JoinSpec::As::Text ? Value(join_values(its.values, spec.with.value_or("")))
                                            : Value(Array(std::move(its.values)));
    return EvalOutcome{std::move(last.env), v, message(role, stringify(v)), std::move(last.pending)};
  };

  return std::visit(
      Overloaded{
          [&](const ExprLeaf& b) { return leaf(b.expr.evaluate(scope)); },
          [&](const ModelBody& b) {
            const Value id = b.model.evaluate(scope);
            if (!id.is_string()) throw Error(std::string("model id must be a string, found ") + id.type_name());
            ModelRequest req;
            req.model_id = id.as_string();
            if (b.input) {
              req.messages = eval_program(env, *b.input).contribution.messages;
            } else {
              req.messages = env.context().messages;
            }
            if (b.parameters) {
              const Value params = expand_templates(*b.parameters, scope);
              if (!params.is_object()) throw Error("model parameters must be an object");
              req.parameters = params.as_object();
            }
            std::string text;
            try {
              text = rt_.models.generate(req, rt_.hooks.on_model_chunk);
            } catch (const BackendError& e) {
              throw Error("model '" + req.model_id + "': " + e.what());
            }
            if (rt_.hooks.on_model_output) rt_.hooks.on_model_output(text);
            return leaf(Value(std::move(text)));
          },
          [&](const ReadBody& b) {
            Contribution c;
            std::string prompt;
            if (b.message) {
              prompt = stringify(b.message->evaluate(scope));
              c.append(message(role, prompt));
            }
            std::string input;
            if (b.file) {
              std::filesystem::path p = stringify(b.file->evaluate(scope));
              if (p.is_relative()) p = rt_.options.base_dir / p;
              input = read_text_file(p);
            } else {
              if (rt_.hooks.on_prompt && !prompt.empty()) rt_.hooks.on_prompt(prompt);
              if (!rt_.input) throw Error("no input source for read");
              auto got = b.multiline ? rt_.input->read_all() : rt_.input->read_line();
              if (!got) throw Error("unexpected end of input");
              input = std::move(*got);
            }
            c.append(message(role, input));
            return EvalOutcome{env, Value(std::move(input)), c, c};
          },
          [&](const TextBody& b) {
            std::vector<Value> values;
            EvalOutcome out = b.body.is_list ? eval_list(env, b.body.blocks, inherited, &values)
                                             : eval_block(env, b.body.blocks.front(), inherited);
            if (!b.body.is_list) values.push_back(out.value);
            out.value = Value(join_values(values, ""));
            return out;
          },
          [&](const LastOfBody& b) {
            if (!b.body.is_list) return eval_block(env, b.body.blocks.front(), inherited);
            EvalOutcome out = eval_list(env, b.body.blocks, inherited, nullptr);
            if (b.body.blocks.empty()) out.value = Value("");
            return out;
          },
          [&](const ArrayBody& b) {
            std::vector<Value> values;
            EvalOutcome out = b.body.is_list ? eval_list(env, b.body.blocks, inherited, &values)
                                             : eval_block(env, b.body.blocks.front(), inherited);
            if (!b.body.is_list) values.push_back(out.value);
            out.value = Value(Array(std::move(values)));
            return out;
          },
          [&](const ObjectBody& b) {
            Object result;
            EvalOutcome out{env, Value(), {}, {}};
            if (b.list) {
              std::vector<Value> values;
              out = b.list->is_list ? eval_list(env, b.list->blocks, inherited, &values)
                                    : eval_block(env, b.list->blocks.front(), inherited);
              if (!b.list->is_list) values.push_back(out.value);
              for (const auto& v : values) {
                if (!v.is_object()) throw Error(std::string("object: element is not an object but ") + v.type_name());
                for (const auto& [k, x] : v.as_object()) result.set(k, x);
              }
            } else {
              Environment cur = env;
              for (std::size_t i = 0; i < b.fields.size(); ++i) {
                EvalOutcome f = eval_program(cur, b.fields[i].second, inherited);
                result.set(b.fields[i].first, f.value);
                out.contribution.append(f.contribution);
                if (i + 1 < b.fields.size()) {
                  cur = f.env.with_context(cur.context() + f.contribution);
                } else {
                  out.env = std::move(f.env);
                  out.pending = std::move(f.pending);
                }
              }
            }
            out.value = Value(std::move(result));
            return out;
          },
          [&](const DataBody& b) { return leaf(b.raw ? b.value : expand_templates(b.value, scope)); },
          [&](const IncludeBody& b) {
            if (!b.resolved) throw Error("include '" + b.file + "' was not resolved");
            return eval_program(env, *b.resolved, inherited);
          },
          [&](const FunctionBody& b) {
            return EvalOutcome{env, Value(ClosurePtr(std::make_shared<InterpClosure>(env, b))), {}, {}};
          },
          [&](const CallBody& b) {
            const Value callee = b.callee.evaluate(scope);
            const auto* closure =
                callee.is_closure() ? dynamic_cast<const InterpClosure*>(callee.as_closure().get()) : nullptr;
            if (!closure) throw Error(std::string("cannot call a value of type ") + callee.type_name());
            const FunctionBody& fn = closure->function();
            for (const auto& [name, _] : b.args) {
              const bool declared = std::any_of(fn.params.begin(), fn.params.end(),
                                                [&](const auto& p) { return p.first == name; });
              if (!declared) throw Error("unexpected argument '" + name + "'");
            }
            Contribution ctx = env.context();
            if (b.pdl_context) ctx = eval_program(env, *b.pdl_context).contribution;
            Environment callee_env = closure->captured().with_context(ctx);
            for (const auto& [pname, ptype] : fn.params) {
              auto it = std::find_if(b.args.begin(), b.args.end(), [&](const auto& a) { return a.first == pname; });
              if (it == b.args.end()) throw Error("missing argument '" + pname + "'");
              Value v = it->second.evaluate(scope);
              if (ptype) {
                if (auto m = check_spec(v, *ptype)) throw Error("argument '" + pname + "': " + m->message());
              }
              callee_env = callee_env.bind(pname, v, message("user", stringify(v)));
            }
            EvalOutcome body = eval_program(callee_env, *fn.body);
            return EvalOutcome{env, body.value, body.contribution, body.contribution};
          },
          [&](const IfBody& b) {
            if (eval_condition(scope, b.condition)) return eval_program(env, b.then_branch, inherited);
            if (b.else_branch) return eval_program(env, *b.else_branch, inherited);
            return EvalOutcome{env, Value(""), {}, {}};
          },
          [&](const ForBody& b) {
            std::vector<std::pair<std::string, const Array*>> lists;
            std::vector<Value> holders;
            holders.reserve(b.bindings.size());
            for (const auto& [name, e] : b.bindings) {
              holders.push_back(e.evaluate(scope));
              if (!holders.back().is_array()) {
                throw Error("for: '" + name + "' must be a list, found " + holders.back().type_name());
              }
              lists.emplace_back(name, &holders.back().as_array());
            }
            const std::size_t n = lists.front().second->size();
            for (const auto& [name, l] : lists) {
              if (l->size() != n) {
                throw Error("for: lists have different lengths ('" + lists.front().first + "' has " +
                            std::to_string(n) + ", '" + name + "' has " + std::to_string(l->size()) + ")");
              }
            }
            Iterations iterations{b.join.as != JoinSpec::As::LastOf, {}, std::nullopt};
            Environment cur = env;
            for (std::size_t i = 0; i < n; ++i) {
              Environment it_env = cur;
              for (const auto& [name, l] : lists) it_env = it_env.bind(name, (*l)[i], message(role, stringify((*l)[i])));
              EvalOutcome o = eval_program(it_env, b.body, inherited);
              if (i + 1 < n) cur = o.env.with_context(cur.context() + o.contribution);
              iterations.add(std::move(o));
            }
            return join(b.join, iterations, env);
          },
          [&](const RepeatBody& b) {
            const Value times = b.times.evaluate(scope);
            if (!times.is_number() || !times.is_integral()) {
              throw Error(std::string("num_iterations must be an integer, found ") + times.type_name());
            }
            const std::int64_t n = times.is_int() ? times.as_int() : static_cast<std::int64_t>(times.as_float());
            if (n < 1 && rt_.hooks.on_warning) {
              Diagnostic d;
              d.severity = Severity::Warning;
              d.message = "num_iterations is " + std::to_string(n) + "; the body runs once";
              d.line = block.location.line;
              d.column = block.location.column;
              rt_.hooks.on_warning(d);
            }
            if (n > rt_.options.max_iterations) {
              throw Error("num_iterations " + std::to_string(n) + " exceeds the iteration limit");
            }
            Iterations iterations{b.join.as != JoinSpec::As::LastOf, {}, std::nullopt};
            Environment cur = env;
            for (std::int64_t k = n; ; --k) {
              EvalOutcome o = eval_program(cur, b.body, inherited);
              const bool more = k > 1;
              if (more) cur = o.env.with_context(cur.context() + o.contribution);
              iterations.add(std::move(o));
              if (!more) break;
            }
            return join(b.join, iterations, env);
          },
          [&](const RepeatUntilBody& b) {
            Iterations iterations{b.join.as != JoinSpec::As::LastOf, {}, std::nullopt};
            Environment cur = env;
            for (std::int64_t count = 1;; ++count) {
              if (count > rt_.options.max_iterations) {
                throw Error("repeat-until did not stop within " + std::to_string(rt_.options.max_iterations) +
                            " iterations");
              }
              EvalOutcome o = eval_program(cur, b.body, inherited);
              const bool cond = eval_condition(EnvScope(o.env), b.until);
              const bool more = rt_.options.until_polarity == UntilPolarity::Example ? !cond : cond;
              if (more) cur = o.env.with_context(cur.context() + o.contribution);
              iterations.add(std::move(o));
              if (!more) break;
            }
            return join(b.join, iterations, env);
          },
          [&](const CodeBody& b) {
            const std::string source = flatten(eval_program(env, b.source).contribution);
            Value v;
            try {
              v = rt_.runners.run(b.lang, source, rt_.session);
            } catch (const BackendError& e) {
              throw Error(std::string(e.what()));
            }
            return leaf(std::move(v));
          },
          [&](const GetBody& b) {
            const Binding* binding = env.lookup(b.name);
            if (!binding) throw Error("undefined variable '" + b.name + "'");
            return EvalOutcome{env, binding->value, binding->contribution, binding->contribution};
          },
      },
      block.body);
}

TopLevelResult Interpreter::run_top_level(const Environment& env, const Program& program) {
  EvalOutcome out = eval_program(env, program);
  Contribution ctx = out.env.context() + out.pending;
  Environment final_env = out.env.with_context(ctx);
  return TopLevelResult{std::move(out.value), std::move(ctx), std::move(final_env)};
}

TopLevelResult evaluate(std::string_view document, const std::vector<Message>& context, Runtime& runtime) {
  ParseResult parsed = parse_program(document);
  if (!parsed.ok()) throw ProgramError(std::move(parsed.diagnostics));
  std::vector<std::filesystem::path> stack;
  const Program program = resolve_includes(*parsed.program, runtime.options.base_dir, stack);
  Interpreter interp(runtime);
  return interp.run_top_level(initial_environment(context), program);
}

}  // namespace pdl
