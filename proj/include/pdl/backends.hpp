#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pdl/context.hpp"
#include "pdl/value.hpp"

namespace pdl {

struct ModelRequest {
  std::string model_id;
  std::vector<Message> messages;
  Object parameters;
};

using ChunkCallback = std::function<void(std::string_view)>;

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  /// The full completion. When `on_chunk` is set it receives the
  /// completion in pieces whose concatenation is the return value.
  virtual std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) = 0;
};

/// Replies with the last user message reversed (bytewise).
class EchoBackend final : public ModelBackend {
 public:
  std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) override;
};

/// Replays a fixed queue of responses and records every request.
class ScriptedBackend final : public ModelBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses);
  /// A JSON array of strings.
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& file);

  std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) override;

  const std::vector<ModelRequest>& requests() const { return requests_; }
  std::size_t remaining() const { return responses_.size() - next_; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<ModelRequest> requests_;
};

/// Chat-completions wire format over HTTP(S).
class HttpChatBackend final : public ModelBackend {
 public:
  struct Config {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string api_key;
    bool stream = true;
    std::chrono::seconds timeout{120};
  };

  explicit HttpChatBackend(Config config);
  /// base_url from PDL_API_BASE (falling back to the OpenAI endpoint),
  /// api_key from PDL_API_KEY.
  static Config config_from_env();

  std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) override;

  /// Request body as sent, for tests.
  static std::string request_body(const ModelRequest& request, bool stream);

 private:
  Config config_;
};

/// Truncates output at the first occurrence of any stop sequence (the stop
/// sequence itself is dropped). Chunks are forwarded as soon as they can
/// no longer be the start of a stop sequence.
class StopFilter {
 public:
  StopFilter(std::vector<std::string> stops, ChunkCallback downstream);

  void feed(std::string_view chunk);
  /// Flushes held-back text and returns the filtered output.
  std::string finish();
  bool stopped() const { return stopped_; }

  /// Stop sequences from a parameters object: `stop` as a string or a list.
  static std::vector<std::string> from_parameters(const Object& parameters);

 private:
  std::vector<std::string> stops_;
  ChunkCallback downstream_;
  std::string pending_;
  std::string output_;
  bool stopped_ = false;
};

/// Routes model ids to backends by their prefix: the text before the first
/// ':' or '/'. "*" registers a fallback.
class BackendRegistry {
 public:
  void add(std::string prefix, std::shared_ptr<ModelBackend> backend);
  ModelBackend& resolve(const std::string& model_id) const;
  bool empty() const { return backends_.empty(); }

  /// Calls the backend with the stop filter applied. The backend sees the
  /// model id without a "prefix:" routing tag.
  std::string generate(const ModelRequest& request, const ChunkCallback& on_chunk) const;

  static std::string prefix_of(const std::string& model_id);

 private:
  std::map<std::string, std::shared_ptr<ModelBackend>> backends_;
};

struct ChatTemplate {
  /// `{role}` and `{content}` are substituted.
  std::string message = "{role}: {content}\n";
};

/// Renders a message list for backends that take a flat prompt.
std::string flatten_chat(const std::vector<Message>& messages, const ChatTemplate& chat_template = {});

/// Per-evaluation state shared by code blocks, keyed by runner kind.
struct Session {
  std::map<std::string, Value> store;
};

class CodeRunner {
 public:
  virtual ~CodeRunner() = default;
  virtual Value run(const std::string& source, Session& session) = 0;
};

/// Evaluates the source as one expression. No side effects.
class ExprRunner final : public CodeRunner {
 public:
  Value run(const std::string& source, Session& session) override;
};

/// Runs an external program with the source on stdin. The last line of
/// stdout is parsed as JSON; if that fails the whole stdout (without its
/// trailing newline) is the result. Session state round-trips through a
/// JSON file named by PDL_SESSION_FILE.
class CommandRunner final : public CodeRunner {
 public:
  struct Config {
    std::vector<std::string> argv;
    std::chrono::milliseconds timeout{30000};
    /// No inherited environment and a fresh temporary working directory.
    bool sandbox = false;
    std::string session_key = "command";
  };

  explicit CommandRunner(Config config);
  Value run(const std::string& source, Session& session) override;

 private:
  Config config_;
};

class RunnerRegistry {
 public:
  void add(std::string lang, std::shared_ptr<CodeRunner> runner);
  Value run(const std::string& lang, const std::string& source, Session& session) const;
  bool has(const std::string& lang) const { return runners_.count(lang) != 0; }

 private:
  std::map<std::string, std::shared_ptr<CodeRunner>> runners_;
};

}  // namespace pdl
