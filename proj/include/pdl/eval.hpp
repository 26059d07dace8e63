#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdl/ast.hpp"
#include "pdl/backends.hpp"
#include "pdl/diagnostic.hpp"
#include "pdl/environment.hpp"
#include "pdl/trace.hpp"

namespace pdl {

/// Where read: blocks without a file get their input.
class InputSource {
 public:
  virtual ~InputSource() = default;
  /// One line without its terminator; nullopt at end of input.
  virtual std::optional<std::string> read_line() = 0;
  /// Everything that is left; nullopt when nothing is left.
  virtual std::optional<std::string> read_all() = 0;
};

class StreamInput final : public InputSource {
 public:
  explicit StreamInput(std::istream& in) : in_(in) {}
  std::optional<std::string> read_line() override;
  std::optional<std::string> read_all() override;

 private:
  std::istream& in_;
};

class ScriptedInput final : public InputSource {
 public:
  explicit ScriptedInput(std::vector<std::string> lines) : lines_(lines.begin(), lines.end()) {}
  std::optional<std::string> read_line() override;
  std::optional<std::string> read_all() override;

 private:
  std::deque<std::string> lines_;
};

enum class UntilPolarity {
  Example,   // stop when the condition is true
  Appendix,  // keep going while the condition is true
};

struct EvalOptions {
  UntilPolarity until_polarity = UntilPolarity::Example;
  std::int64_t max_iterations = 1'000'000;
  /// Directory that relative read: file names resolve against.
  std::filesystem::path base_dir;
};

struct EvalHooks {
  /// Text of read: messages, shown before input is read.
  std::function<void(std::string_view)> on_prompt;
  /// Model output as it is produced. Unset disables streaming.
  std::function<void(std::string_view)> on_model_chunk;
  /// Model output once a call completes.
  std::function<void(const std::string&)> on_model_output;
  std::function<void(const Diagnostic&)> on_warning;
};

/// Services shared by every block of one top-level evaluation.
struct Runtime {
  BackendRegistry models;
  RunnerRegistry runners;
  Session session;
  EvalOptions options;
  EvalHooks hooks;
  std::shared_ptr<InputSource> input;
  TraceRecorder* trace = nullptr;

  /// Registers the "expr" and "pdl" code runners.
  void add_builtin_runners();
};

/// ⟨S', v, s⟩ plus `pending`: the trailing part of the contribution that
/// has not been folded into S'(context) yet.
struct EvalOutcome {
  Environment env;
  Value value;
  Contribution contribution;
  Contribution pending;
};

struct TopLevelResult {
  Value value;
  Contribution context;
  Environment env;
};

class Interpreter {
 public:
  explicit Interpreter(Runtime& runtime) : rt_(runtime) {}

  /// `role` is the explicit role inherited from the enclosing block.
  EvalOutcome eval_program(const Environment& env, const Program& program,
                           const std::optional<std::string>& role = std::nullopt);
  EvalOutcome eval_block(const Environment& env, const Block& block,
                         const std::optional<std::string>& role = std::nullopt);

  /// The final context is the initial context, the program's internal
  /// context growth, and its pending contribution.
  TopLevelResult run_top_level(const Environment& env, const Program& program);

 private:
  struct Frame;

  EvalOutcome eval_list(const Environment& env, const std::vector<Block>& blocks, const std::optional<std::string>& role,
                        std::vector<Value>* values);
  EvalOutcome eval_body(const Environment& env, const Block& block, const std::string& role,
                        const std::optional<std::string>& inherited);

  Runtime& rt_;
};

/// Environment with `context` seeded from the given messages and each
/// (name, value) bound with its string form as contribution.
Environment initial_environment(const std::vector<Message>& context,
                                const std::vector<std::pair<std::string, Value>>& bindings = {});

/// Parses `document` (YAML text) and evaluates it. Throws ProgramError or
/// EvalError.
TopLevelResult evaluate(std::string_view document, const std::vector<Message>& context, Runtime& runtime);

/// Data-block expansion: string scalars in the tree are templates.
Value expand_templates(const Value& tree, const expr::Scope& scope);

/// Scope over the value components of an environment.
class EnvScope final : public expr::Scope {
 public:
  explicit EnvScope(const Environment& env) : env_(env) {}
  const Value* lookup(std::string_view name) const override;

 private:
  const Environment& env_;
};

}  // namespace pdl
