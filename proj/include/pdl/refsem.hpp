#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "pdl/ast.hpp"
#include "pdl/error.hpp"
#include "pdl/value.hpp"

namespace pdl::refsem {

/// The program is outside the fragment the inference rules cover.
class Unsupported : public Error {
 public:
  explicit Unsupported(const std::string& what) : Error("unsupported by oracle: " + what) {}
};

/// S: name -> (v, s). "context" maps to (ctx, ctx).
using RefEnv = std::map<std::string, std::pair<Value, std::string>>;

RefEnv empty_env(const std::string& context = "");

struct RefResult {
  RefEnv env;
  Value value;
  std::string str;
};

struct Oracles {
  /// m(s) = v
  std::function<std::string(const std::string&)> model;
  /// s ⇓^lang v
  std::function<Value(const std::string& lang, const std::string& source)> code;
  /// Continue repeat-until while the condition is true (the rules as
  /// printed); false flips to stopping on true.
  bool continue_on_true = true;
  std::int64_t max_iterations = 100000;
};

RefResult ref_eval_program(const RefEnv& env, const Program& p, const Oracles& oracles);

/// Deterministic program in the string fragment, as source data, with at
/// most `size_budget` blocks. Every generated program terminates.
Value gen_fragment_value(std::uint64_t seed, int size_budget);
Program gen_fragment_program(std::uint64_t seed, int size_budget);

/// The pure model used by the differential tests: "<m" + hex(fnv1a(s)) + ">".
std::string fragment_model(const std::string& prompt);

}  // namespace pdl::refsem
