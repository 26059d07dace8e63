#include <random>

#include "pdl/parser.hpp"
#include "pdl/refsem.hpp"

namespace pdl::refsem {

namespace {

struct FnInfo {
  std::string name;
  std::vector<std::string> params;
};

struct GenScope {
  std::vector<std::string> names;
  std::vector<FnInfo> fns;
  int loop_depth = 0;
};

class Generator {
 public:
  Generator(std::uint64_t seed, int soft_budget) : rng_(seed), budget_(soft_budget) {}

  Value program(GenScope sc, int depth) {
    if (depth > 0 && (budget_ <= 1 || depth > 4 || chance(35))) return block(sc, depth);
    Array items;
    const int n = depth == 0 ? 2 + pick(6) : pick(5);
    for (int i = 0; i < n && budget_ > 0; ++i) items.push_back(block(sc, depth));
    return Value(std::move(items));
  }

  int made() const { return made_; }

 private:
  std::mt19937_64 rng_;
  int budget_;
  int made_ = 0;

  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
  bool chance(int percent) { return pick(100) < percent; }
  template <typename T>
  const T& one_of(const std::vector<T>& v) { return v[pick(static_cast<int>(v.size()))]; }

  Value leaf(const GenScope& sc) {
    static const std::vector<Value> pool = {"a", "b", "c", "hi ", "xy", "", "${1 + 1}", 7, true, "q\n"};
    if (!sc.names.empty() && chance(20)) return Value("<${" + one_of(sc.names) + "}>");
    return one_of(pool);
  }

  std::string condition(const GenScope& sc) {
    switch (pick(4)) {
      case 0: return "${true}";
      case 1: return "${false}";
      case 2: return "${(context | length) > " + std::to_string(pick(12)) + "}";
      default:
        if (sc.names.empty()) return "${false}";
        return "${" + one_of(sc.names) + " == 'a'}";
    }
  }

  // Block in a list position; may extend the scope for later siblings.
  Value block(GenScope& sc, int depth) {
    ++made_;
    --budget_;
    if (budget_ <= 0 || depth > 4 || chance(15 + 10 * depth)) return leaf(sc);
    Object o;
    std::optional<FnInfo> defined_fn;
    GenScope inner = sc;
    switch (pick(11)) {
      case 0:
        o.set("lastOf", program(inner, depth + 1));
        break;
      case 1:
        o.set("if", condition(sc));
        o.set("then", program(inner, depth + 1));
        if (chance(50)) o.set("else", program(inner, depth + 1));
        break;
      case 2: {
        inner.loop_depth++;
        o.set("repeat", program(inner, depth + 1));
        o.set("num_iterations", pick(6) - 1);
        break;
      }
      case 3: {
        inner.loop_depth++;
        Array body{Value("z")};
        ++made_;
        Value rest = program(inner, depth + 1);
        if (rest.is_array()) {
          for (const auto& v : rest.as_array()) body.push_back(v);
        } else {
          body.push_back(rest);
        }
        o.set("repeat", Value(std::move(body)));
        o.set("until", chance(30) ? std::string("${false}")
                                  : "${(context | length) < " + std::to_string(1 + pick(30)) + "}");
        break;
      }
      case 4:
        if (sc.names.empty()) return leaf(sc);
        o.set("get", one_of(sc.names));
        break;
      case 5: {
        std::string ref = sc.names.empty() ? "${2 * 3}" : "${" + one_of(sc.names) + "}";
        switch (pick(3)) {
          case 0: o.set("data", Object{{"k", Value(ref)}, {"n", 1}}); break;
          case 1: o.set("data", Array{Value("x"), Value(ref)}); break;
          default:
            o.set("data", Value(ref));
            o.set("raw", true);
        }
        break;
      }
      case 6: {
        if (sc.loop_depth > 0) return leaf(sc);
        FnInfo f{"f" + std::to_string(pick(3)), {}};
        Object params;
        GenScope body_scope = sc;
        for (int i = 0, n = pick(3); i < n; ++i) {
          f.params.push_back("p" + std::to_string(i));
          params.set(f.params.back(), Value());
          body_scope.names.push_back(f.params.back());
        }
        o.set("function", Value(std::move(params)));
        o.set("return", program(body_scope, depth + 1));
        o.set("def", f.name);
        defined_fn = f;
        break;
      }
      case 7: {
        if (sc.fns.empty()) return leaf(sc);
        const FnInfo& f = one_of(sc.fns);
        o.set("call", "${" + f.name + "}");
        Object args;
        for (const auto& p : f.params) args.set(p, leaf(sc));
        o.set("args", Value(std::move(args)));
        break;
      }
      case 8:
        o.set("model", "m");
        if (chance(50)) o.set("input", program(inner, depth + 1));
        break;
      case 9: {
        static const std::vector<Value> sources = {"1 + 2", "'ab' ~ 'c'", "[1, 2]", "3 * 4", "{'k': 1}"};
        o.set("lang", "expr");
        if (chance(25)) {
          o.set("code", Array{Value("1"), Value(" + 2")});
          made_ += 2;
        } else {
          o.set("code", one_of(sources));
          ++made_;
        }
        break;
      }
      default:
        o.set("lastOf", Array{leaf(sc), leaf(sc)});
        made_ += 2;
        break;
    }
    if (!defined_fn) {
      if (chance(12)) {
        Object defs;
        const std::string name = "d" + std::to_string(pick(2));
        defs.set(name, program(sc, depth + 1));
        o.set("defs", Value(std::move(defs)));
      }
      if (chance(30)) {
        const std::string name = sc.loop_depth == 0 ? "x" + std::to_string(pick(4)) : "l" + std::to_string(pick(2));
        o.set("def", name);
        if (sc.loop_depth == 0) sc.names.push_back(name);
      }
    } else {
      sc.fns.push_back(*defined_fn);
    }
    if (chance(15)) o.set("contribute", Array{Value("result")});
    if (chance(10)) o.set("role", "system");
    return Value(std::move(o));
  }
};

}  // namespace

Value gen_fragment_value(std::uint64_t seed, int size_budget) {
  std::mt19937_64 seeder(seed);
  if (size_budget <= 1) {
    static const std::vector<std::string> leaves = {"a", "b", "hi ", "xy"};
    return Value(leaves[seeder() % leaves.size()]);
  }
  for (;;) {
    Generator g(seeder(), size_budget * 3 / 4);
    Value v = g.program({}, 0);
    if (g.made() <= size_budget) return v;
  }
}

Program gen_fragment_program(std::uint64_t seed, int size_budget) {
  YamlDocument doc;
  doc.root = gen_fragment_value(seed, size_budget);
  ParseResult r = parse_document(doc);
  if (!r.ok()) throw ProgramError(r.diagnostics);
  return *r.program;
}

}  // namespace pdl::refsem
