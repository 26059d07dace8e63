#include "pdl/backends.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pdl/error.hpp"
#include "pdl/expr.hpp"

namespace pdl {

namespace {

/// Splits text into word-sized pieces, each keeping its trailing whitespace.
std::vector<std::string> word_chunks(const std::string& text) {
  std::vector<std::string> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    chunks.push_back(text.substr(i, j - i));
    i = j;
  }
  return chunks;
}

std::string deliver(const std::string& text, const ChunkCallback& on_chunk) {
  if (on_chunk) {
    for (const auto& c : word_chunks(text)) on_chunk(c);
  }
  return text;
}

}  // namespace

std::string EchoBackend::generate(const ModelRequest& request, const ChunkCallback& on_chunk) {
  std::string last;
  for (const auto& m : request.messages) {
    if (m.role == "user") last = m.content;
  }
  std::reverse(last.begin(), last.end());
  return deliver(last, on_chunk);
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) : responses_(std::move(responses)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw BackendError("cannot open scripted responses " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const Value v = parse_json(ss.str());
  if (!v.is_array()) throw BackendError(file.string() + ": expected a JSON array of strings");
  std::vector<std::string> responses;
  for (const auto& item : v.as_array()) {
    if (!item.is_string()) throw BackendError(file.string() + ": expected a JSON array of strings");
    responses.push_back(item.as_string());
  }
  return std::make_shared<ScriptedBackend>(std::move(responses));
}

std::string ScriptedBackend::generate(const ModelRequest& request, const ChunkCallback& on_chunk) {
  requests_.push_back(request);
  if (next_ >= responses_.size()) {
    throw BackendError("scripted backend exhausted after " + std::to_string(responses_.size()) + " responses");
  }
  return deliver(responses_[next_++], on_chunk);
}

StopFilter::StopFilter(std::vector<std::string> stops, ChunkCallback downstream)
    : downstream_(std::move(downstream)) {
  for (auto& s : stops) {
    if (!s.empty()) stops_.push_back(std::move(s));
  }
}

void StopFilter::feed(std::string_view chunk) {
  if (stopped_) return;
  pending_ += chunk;
  std::size_t cut = std::string::npos;
  for (const auto& s : stops_) cut = std::min(cut, pending_.find(s));
  std::string emit;
  if (cut != std::string::npos) {
    emit = pending_.substr(0, cut);
    pending_.clear();
    stopped_ = true;
  } else {
    std::size_t hold = 0;
    for (const auto& s : stops_) {
      for (std::size_t k = std::min(s.size() - 1, pending_.size()); k > hold; --k) {
        if (pending_.compare(pending_.size() - k, k, s, 0, k) == 0) {
          hold = k;
          break;
        }
      }
    }
    emit = pending_.substr(0, pending_.size() - hold);
    pending_.erase(0, pending_.size() - hold);
  }
  if (!emit.empty()) {
    output_ += emit;
    if (downstream_) downstream_(emit);
  }
}

std::string StopFilter::finish() {
  if (!stopped_ && !pending_.empty()) {
    output_ += pending_;
    if (downstream_) downstream_(pending_);
    pending_.clear();
  }
  return output_;
}

std::vector<std::string> StopFilter::from_parameters(const Object& parameters) {
  std::vector<std::string> out;
  const Value* stop = parameters.find("stop");
  if (!stop) return out;
  if (stop->is_string()) {
    out.push_back(stop->as_string());
  } else if (stop->is_array()) {
    for (const auto& s : stop->as_array()) {
      if (!s.is_string()) throw BackendError("model parameter 'stop' must hold strings");
      out.push_back(s.as_string());
    }
  } else if (!stop->is_null()) {
    throw BackendError("model parameter 'stop' must be a string or a list of strings");
  }
  return out;
}

void BackendRegistry::add(std::string prefix, std::shared_ptr<ModelBackend> backend) {
  backends_[std::move(prefix)] = std::move(backend);
}

std::string BackendRegistry::prefix_of(const std::string& model_id) {
  const std::size_t cut = model_id.find_first_of(":/");
  return cut == std::string::npos ? model_id : model_id.substr(0, cut);
}

ModelBackend& BackendRegistry::resolve(const std::string& model_id) const {
  auto it = backends_.find(prefix_of(model_id));
  if (it == backends_.end()) it = backends_.find("*");
  if (it == backends_.end()) throw BackendError("no model backend for '" + model_id + "'");
  return *it->second;
}

std::string BackendRegistry::generate(const ModelRequest& request, const ChunkCallback& on_chunk) const {
  ModelBackend& backend = resolve(request.model_id);
  ModelRequest routed = request;
  const std::size_t colon = routed.model_id.find(':');
  if (colon != std::string::npos && backends_.count(routed.model_id.substr(0, colon))) {
    routed.model_id.erase(0, colon + 1);
  }
  StopFilter filter(StopFilter::from_parameters(request.parameters), on_chunk);
  bool chunked = false;
  const std::string full = backend.generate(routed, [&](std::string_view c) {
    chunked = true;
    filter.feed(c);
  });
  if (!chunked) filter.feed(full);
  return filter.finish();
}

std::string flatten_chat(const std::vector<Message>& messages, const ChatTemplate& chat_template) {
  std::string out;
  for (const auto& m : messages) {
    std::string line = chat_template.message;
    for (std::size_t p; (p = line.find("{role}")) != std::string::npos;) line.replace(p, 6, m.role);
    const std::size_t p = line.find("{content}");
    if (p != std::string::npos) line.replace(p, 9, m.content);
    out += line;
  }
  return out;
}

Value ExprRunner::run(const std::string& source, Session&) {
  return expr::evaluate(*expr::parse(source), expr::EmptyScope{});
}

void RunnerRegistry::add(std::string lang, std::shared_ptr<CodeRunner> runner) {
  runners_[std::move(lang)] = std::move(runner);
}

Value RunnerRegistry::run(const std::string& lang, const std::string& source, Session& session) const {
  auto it = runners_.find(lang);
  if (it == runners_.end()) {
    std::string msg = "no code runner for language '" + lang + "'";
    if (lang == "python") msg += " (configure one, e.g. --runner python=command:python3)";
    throw BackendError(msg);
  }
  return it->second->run(source, session);
}

}  // namespace pdl
