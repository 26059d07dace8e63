#include "pdl/refsem.hpp"

#include <algorithm>

#include "pdl/expr.hpp"

namespace pdl::refsem {

namespace {

class RefScope final : public expr::Scope {
 public:
  explicit RefScope(const RefEnv& env) : env_(env) {}
  const Value* lookup(std::string_view name) const override {
    auto it = env_.find(std::string(name));
    return it == env_.end() ? nullptr : &it->second.first;
  }

 private:
  const RefEnv& env_;
};

/// ⟨x, doc, S⟩
class RefClosure final : public ClosureBase {
 public:
  RefClosure(std::vector<std::string> params, std::shared_ptr<const Program> doc, RefEnv env)
      : params_(std::move(params)), doc_(std::move(doc)), env_(std::move(env)) {}

  std::vector<std::string> param_names() const override { return params_; }
  const void* body_identity() const override { return doc_.get(); }
  std::vector<std::pair<std::string, Value>> captured_values() const override {
    std::vector<std::pair<std::string, Value>> out;
    for (const auto& [k, v] : env_) out.emplace_back(k, v.first);
    return out;
  }

  const std::vector<std::string>& params() const { return params_; }
  const Program& doc() const { return *doc_; }
  const RefEnv& env() const { return env_; }

 private:
  std::vector<std::string> params_;
  std::shared_ptr<const Program> doc_;
  RefEnv env_;
};

RefEnv with_context(RefEnv s, const std::string& ctx) {
  s["context"] = {Value(ctx), ctx};
  return s;
}

const std::string& context_of(const RefEnv& s) { return s.at("context").second; }

Value data_value(const Value& e, const RefScope& scope) {
  if (e.is_string()) return TemplateExpr::parse(e).evaluate(scope);
  if (e.is_array()) {
    Array a;
    for (const auto& x : e.as_array()) a.push_back(data_value(x, scope));
    return Value(std::move(a));
  }
  if (e.is_object()) {
    Object o;
    for (const auto& [k, x] : e.as_object()) o.set(k, data_value(x, scope));
    return Value(std::move(o));
  }
  return e;
}

class Oracle {
 public:
  explicit Oracle(const Oracles& o) : o_(o) {}

  // ⟨S, p⟩ ⇓ ⟨S', v, s⟩ for programs.
  RefResult program(const RefEnv& s, const Program& p) {
    if (!p.is_list) return block(s, p.blocks.front());
    return list(s, p.blocks, 0);
  }

 private:
  const Oracles& o_;

  // Empty array, singleton and cons rules.
  RefResult list(const RefEnv& s, const std::vector<Block>& blocks, std::size_t from) {
    if (from == blocks.size()) return {s, Value(Array{}), ""};
    RefResult head = block(s, blocks[from]);
    if (from + 1 == blocks.size()) return {head.env, Value(Array{head.value}), head.str};
    const std::string ctx = context_of(s) + head.str;
    RefResult rest = list(with_context(head.env, ctx), blocks, from + 1);
    Array vs{head.value};
    for (const auto& v : rest.value.as_array()) vs.push_back(v);
    return {rest.env, Value(std::move(vs)), head.str + rest.str};
  }

  RefResult block(const RefEnv& s, const Block& b) {
    if (b.parser || b.spec) throw Unsupported("parser/spec");
    if (!b.contribute.result) throw Unsupported("result exclusion");
    if (const auto* leaf = std::get_if<ExprLeaf>(&b.body)) {
      // ⟨S, s⟩ ⇓ ⟨S, s, s⟩
      Value v = leaf->expr.evaluate(RefScope(s));
      return {s, v, stringify(v)};
    }
    // Defs rules: each b_x runs in S and the rest continues in S[x ← (v_x, s_x)].
    RefEnv cur = s;
    for (const auto& [x, bx] : b.defs) {
      RefResult d = program(cur, bx);
      cur[x] = {d.value, d.str};
    }
    RefResult r = body(cur, b);
    // Block rules (tt / ff).
    if (b.def) r.env[*b.def] = {r.value, r.str};
    if (!b.contribute.context) r.str = "";
    return r;
  }

  RefResult body(const RefEnv& s, const Block& b) {
    const RefScope scope(s);
    if (const auto* m = std::get_if<ModelBody>(&b.body)) {
      if (!o_.model) throw Unsupported("model");
      const std::string prompt = m->input ? program(s, *m->input).str : context_of(s);
      Value v(o_.model(prompt));
      return {s, v, stringify(v)};
    }
    if (const auto* c = std::get_if<CodeBody>(&b.body)) {
      if (!o_.code) throw Unsupported("code");
      const std::string src = program(s, c->source).str;
      Value v = o_.code(c->lang, src);
      return {s, v, stringify(v)};
    }
    if (const auto* g = std::get_if<GetBody>(&b.body)) {
      auto it = s.find(g->name);
      if (it == s.end()) throw Error("undefined variable '" + g->name + "'");
      return {s, it->second.first, it->second.second};
    }
    if (const auto* d = std::get_if<DataBody>(&b.body)) {
      Value v = d->raw ? d->value : data_value(d->value, scope);
      return {s, v, stringify(v)};
    }
    if (const auto* l = std::get_if<LastOfBody>(&b.body)) {
      RefResult r = program(s, l->body);
      if (l->body.is_list) {
        const auto& vs = r.value.as_array();
        r.value = vs.empty() ? Value("") : vs.back();
      }
      return r;
    }
    if (const auto* i = std::get_if<IfBody>(&b.body)) {
      if (eval_condition(scope, i->condition)) return program(s, i->then_branch);
      if (i->else_branch) return program(s, *i->else_branch);
      return {s, Value(""), ""};
    }
    if (const auto* r = std::get_if<RepeatBody>(&b.body)) {
      if (r->join.as != JoinSpec::As::LastOf) throw Unsupported("join");
      const Value n = r->times.evaluate(scope);
      if (!n.is_number() || !n.is_integral()) throw Error("num_iterations must be an integer");
      return repeat(s, r->body, n.is_int() ? n.as_int() : static_cast<std::int64_t>(n.as_float()));
    }
    if (const auto* u = std::get_if<RepeatUntilBody>(&b.body)) {
      if (u->join.as != JoinSpec::As::LastOf) throw Unsupported("join");
      return until(s, *u, 1);
    }
    if (const auto* f = std::get_if<FunctionBody>(&b.body)) {
      std::vector<std::string> params;
      for (const auto& [x, t] : f->params) {
        if (t) throw Unsupported("typed parameters");
        params.push_back(x);
      }
      return {s, Value(ClosurePtr(std::make_shared<RefClosure>(params, f->body, s))), ""};
    }
    if (const auto* c = std::get_if<CallBody>(&b.body)) {
      if (c->pdl_context) throw Unsupported("pdl_context");
      const Value f = c->callee.evaluate(scope);
      const auto* closure = f.is_closure() ? dynamic_cast<const RefClosure*>(f.as_closure().get()) : nullptr;
      if (!closure) throw Error("not a function");
      // S'[context ← S(context)] + args
      RefEnv callee = with_context(closure->env(), context_of(s));
      if (c->args.size() != closure->params().size()) throw Error("argument count mismatch");
      for (const auto& x : closure->params()) {
        auto it = std::find_if(c->args.begin(), c->args.end(), [&](const auto& a) { return a.first == x; });
        if (it == c->args.end()) throw Error("missing argument '" + x + "'");
        Value v = it->second.evaluate(scope);
        callee[x] = {v, stringify(v)};
      }
      RefResult r = program(callee, closure->doc());
      return {s, r.value, r.str};
    }
    throw Unsupported(kind_name(b.body));
  }

  RefResult repeat(const RefEnv& s, const Program& doc, std::int64_t n) {
    RefResult first = program(s, doc);
    if (n <= 1) return first;
    if (n > o_.max_iterations) throw Error("iteration limit");
    const std::string ctx = context_of(s) + first.str;
    return repeat(with_context(first.env, ctx), doc, n - 1);
  }

  RefResult until(const RefEnv& s, const RepeatUntilBody& u, std::int64_t count) {
    if (count > o_.max_iterations) throw Error("iteration limit");
    RefResult first = program(s, u.body);
    const bool c = eval_condition(RefScope(first.env), u.until);
    if (c != o_.continue_on_true) return first;
    const std::string ctx = context_of(s) + first.str;
    return until(with_context(first.env, ctx), u, count + 1);
  }
};

}  // namespace

RefEnv empty_env(const std::string& context) {
  RefEnv s;
  s["context"] = {Value(context), context};
  return s;
}

RefResult ref_eval_program(const RefEnv& env, const Program& p, const Oracles& oracles) {
  return Oracle(oracles).program(env, p);
}

std::string fragment_model(const std::string& prompt) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : prompt) {
    h ^= c;
    h *= 16777619u;
  }
  static const char* digits = "0123456789abcdef";
  std::string hex(8, '0');
  for (int i = 7; i >= 0; --i, h >>= 4) hex[i] = digits[h & 0xF];
  return "<m" + hex + ">";
}

}  // namespace pdl::refsem
