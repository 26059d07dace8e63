#include "pdl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include "pdl/error.hpp"
#include "pdl/eval.hpp"
#include "pdl/parser.hpp"
#include "pdl/schema.hpp"

namespace pdl::cli {

namespace {

constexpr int kOk = 0;
constexpr int kEvalError = 1;
constexpr int kProgramError = 2;

struct RunFlags {
  std::string file;
  std::vector<std::string> data;
  std::string context_file;
  std::string stdin_script;
  std::vector<std::string> backends;
  std::vector<std::string> runners;
  bool stream = true;
  std::string trace_file;
  bool trace_timing = false;
  bool sandbox = false;
  std::string until_polarity = "example";
  std::int64_t max_iterations = 1'000'000;
  bool diagnostics_json = false;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// [PREFIX:]KIND[=CONFIG]
void add_backend(BackendRegistry& registry, const std::string& spec, bool stream) {
  const auto eq = spec.find('=');
  std::string name = spec.substr(0, eq);
  const std::string config = eq == std::string::npos ? "" : spec.substr(eq + 1);
  std::string prefix = "*";
  if (const auto colon = name.find(':'); colon != std::string::npos) {
    prefix = name.substr(0, colon);
    name = name.substr(colon + 1);
  }
  std::shared_ptr<ModelBackend> backend;
  if (name == "echo") {
    backend = std::make_shared<EchoBackend>();
  } else if (name == "scripted") {
    if (config.empty()) throw UsageError("--backend scripted needs a response file: scripted=FILE");
    backend = ScriptedBackend::from_file(config);
  } else if (name == "http") {
    HttpChatBackend::Config c = HttpChatBackend::config_from_env();
    if (!config.empty()) c.base_url = config;
    c.stream = stream;
    backend = std::make_shared<HttpChatBackend>(c);
  } else {
    throw UsageError("unknown backend kind '" + name + "' (expected echo, scripted or http)");
  }
  registry.add(prefix, backend);
}

// LANG=command:ARGV | LANG=expr | LANG=pdl
void add_runner(Runtime& rt, const std::string& spec, bool sandbox) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw UsageError("--runner expects LANG=CONFIG");
  const std::string lang = spec.substr(0, eq);
  const std::string config = spec.substr(eq + 1);
  if (config == "expr") {
    rt.runners.add(lang, std::make_shared<ExprRunner>());
  } else if (config.rfind("command:", 0) == 0) {
    CommandRunner::Config c;
    c.argv = split_words(config.substr(8));
    if (c.argv.empty()) throw UsageError("--runner " + lang + ": empty command");
    c.sandbox = sandbox;
    c.session_key = lang;
    rt.runners.add(lang, std::make_shared<CommandRunner>(c));
  } else {
    throw UsageError("unknown runner config '" + config + "' (expected command:ARGV or expr)");
  }
}

std::vector<Message> load_context(const std::string& path) {
  const std::string text = read_file(path);
  try {
    const Value v = parse_json(text);
    if (v.is_array()) {
      std::vector<Message> out;
      for (const auto& m : v.as_array()) {
        const Value* role = m.is_object() ? m.as_object().find("role") : nullptr;
        const Value* content = m.is_object() ? m.as_object().find("content") : nullptr;
        if (!role || !content || !role->is_string() || !content->is_string()) {
          throw UsageError(path + ": context messages need string role and content");
        }
        out.push_back({role->as_string(), content->as_string()});
      }
      return out;
    }
  } catch (const ValueError&) {
  }
  return {{"user", text}};
}

std::vector<std::pair<std::string, Value>> parse_data(const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, Value>> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--data expects NAME=VALUE, got '" + item + "'");
    const std::string raw = item.substr(eq + 1);
    Value v;
    try {
      v = parse_json(raw);
    } catch (const ValueError&) {
      v = Value(raw);
    }
    out.emplace_back(item.substr(0, eq), v);
  }
  return out;
}

std::vector<std::string> load_lines(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void report(const std::vector<Diagnostic>& diagnostics, const std::string& file, bool json, std::ostream& err) {
  if (json) {
    err << to_json(diagnostics) << "\n";
    return;
  }
  for (const auto& d : diagnostics) err << d.format(file) << "\n";
}

/// Parses and validates `file`; on failure reports and returns the exit code.
std::variant<Program, int> load(const std::string& file, bool json, std::ostream& err) {
  try {
    return load_program_file(file);
  } catch (const ProgramError& e) {
    report(e.diagnostics(), file, json, err);
    return kProgramError;
  } catch (const Error& e) {
    err << "pdl: " << e.what() << "\n";
    return kEvalError;
  }
}

std::string render_result(const Value& v) { return v.is_string() ? v.as_string() : to_json(v); }

int cmd_run(const RunFlags& f, Streams io) {
  Runtime rt;
  rt.options.base_dir = std::filesystem::path(f.file).parent_path();
  rt.options.max_iterations = f.max_iterations;
  rt.options.until_polarity = f.until_polarity == "appendix" ? UntilPolarity::Appendix : UntilPolarity::Example;
  rt.add_builtin_runners();

  std::vector<Message> context;
  std::vector<std::pair<std::string, Value>> bindings;
  try {
    for (const auto& b : f.backends) add_backend(rt.models, b, f.stream);
    if (rt.models.empty()) add_backend(rt.models, "http", f.stream);
    for (const auto& r : f.runners) add_runner(rt, r, f.sandbox);
    if (!f.context_file.empty()) context = load_context(f.context_file);
    bindings = parse_data(f.data);
    if (!f.stdin_script.empty()) {
      rt.input = std::make_shared<ScriptedInput>(load_lines(f.stdin_script));
    } else {
      rt.input = std::make_shared<StreamInput>(io.in);
    }
  } catch (const UsageError& e) {
    io.err << "pdl: " << e.what() << "\n";
    return kProgramError;
  } catch (const Error& e) {
    io.err << "pdl: " << e.what() << "\n";
    return kEvalError;
  }

  auto loaded = load(f.file, f.diagnostics_json, io.err);
  if (const int* failed = std::get_if<int>(&loaded)) return *failed;
  const Program& program = std::get<Program>(loaded);

  const char* green = io.color ? "\x1b[32m" : "";
  const char* reset = io.color ? "\x1b[0m" : "";
  rt.hooks.on_prompt = [&](std::string_view text) { io.err << text << std::flush; };
  if (f.stream) {
    rt.hooks.on_model_chunk = [&](std::string_view chunk) { io.out << green << chunk << reset << std::flush; };
    rt.hooks.on_model_output = [&](const std::string&) { io.out << "\n" << std::flush; };
  } else {
    rt.hooks.on_model_output = [&](const std::string& text) { io.out << green << text << reset << "\n" << std::flush; };
  }
  rt.hooks.on_warning = [&](const Diagnostic& d) { io.err << d.format(f.file) << "\n"; };

  std::optional<TraceRecorder> trace;
  if (!f.trace_file.empty()) {
    trace.emplace(f.trace_timing);
    rt.trace = &*trace;
  }

  int code = kOk;
  try {
    const TopLevelResult result = Interpreter(rt).run_top_level(initial_environment(context, bindings), program);
    io.out << render_result(result.value) << "\n" << std::flush;
    if (trace) {
      const std::string context_text = flatten(result.context);
      trace->leave(&result.value, &context_text, nullptr);
    }
  } catch (const ProgramError& e) {
    report(e.diagnostics(), f.file, f.diagnostics_json, io.err);
    code = kProgramError;
  } catch (const std::exception& e) {
    io.err << f.file << ": error: " << e.what() << "\n";
    if (trace) {
      const std::string message = e.what();
      trace->leave(nullptr, nullptr, &message);
    }
    code = kEvalError;
  }

  if (trace) {
    std::ofstream out(f.trace_file, std::ios::binary);
    out << trace->to_json();
    if (!out) {
      io.err << "pdl: cannot write trace to " << f.trace_file << "\n";
      if (code == kOk) code = kEvalError;
    }
  }
  return code;
}

int cmd_check(const std::string& file, bool json, Streams io) {
  auto loaded = load(file, json, io.err);
  const int* failed = std::get_if<int>(&loaded);
  return failed ? *failed : kOk;
}

int cmd_fmt(const std::string& file, Streams io) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const Error& e) {
    io.err << "pdl: " << e.what() << "\n";
    return kEvalError;
  }
  ParseResult r = parse_program(text);
  if (!r.ok()) {
    report(r.diagnostics, file, false, io.err);
    return kProgramError;
  }
  io.out << serialize_program(*r.program);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Prompt Declaration Language interpreter", "pdl"};
  app.require_subcommand(1);

  RunFlags f;
  auto* run_cmd = app.add_subcommand("run", "Evaluate a program");
  run_cmd->add_option("file", f.file, "Program file")->required();
  run_cmd->add_option("--data", f.data, "Initial binding NAME=VALUE (VALUE as JSON, else a string)");
  run_cmd->add_option("--context", f.context_file, "Initial context: JSON message list or plain text");
  run_cmd->add_option("--stdin-script", f.stdin_script, "Answer read: blocks from this file, one line each");
  run_cmd->add_option("--backend", f.backends, "Model backend [PREFIX:]KIND[=CONFIG]; KIND is echo, scripted or http");
  run_cmd->add_option("--runner", f.runners, "Code runner LANG=command:ARGV or LANG=expr");
  run_cmd->add_flag("--stream,!--no-stream", f.stream, "Stream model output as it arrives (default on)");
  run_cmd->add_option("--trace", f.trace_file, "Write the execution trace as JSON");
  run_cmd->add_flag("--trace-timing", f.trace_timing, "Record block timings in the trace");
  run_cmd->add_flag("--sandbox", f.sandbox, "Run command runners with an empty environment in a temp directory");
  run_cmd->add_option("--until-polarity", f.until_polarity, "repeat/until stops on true (example) or continues (appendix)")
      ->check(CLI::IsMember({"example", "appendix"}));
  run_cmd->add_option("--max-iterations", f.max_iterations, "Loop iteration limit")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--diagnostics-json", f.diagnostics_json, "Report program errors as JSON");

  std::string check_file;
  bool check_json = false;
  auto* check_cmd = app.add_subcommand("check", "Validate a program without running it");
  check_cmd->add_option("file", check_file, "Program file")->required();
  check_cmd->add_flag("--diagnostics-json", check_json, "Report program errors as JSON");

  std::string fmt_file;
  auto* fmt_cmd = app.add_subcommand("fmt", "Print a program in canonical form");
  fmt_cmd->add_option("file", fmt_file, "Program file")->required();

  auto* schema_cmd = app.add_subcommand("schema", "Print the meta-schema");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kOk : kProgramError;
  }

  if (*run_cmd) return cmd_run(f, io);
  if (*check_cmd) return cmd_check(check_file, check_json, io);
  if (*fmt_cmd) return cmd_fmt(fmt_file, io);
  if (*schema_cmd) {
    io.out << meta_schema_text();
    return kOk;
  }
  return kProgramError;
}

}  // namespace pdl::cli
