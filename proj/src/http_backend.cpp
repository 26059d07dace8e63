#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "pdl/backends.hpp"
#include "pdl/error.hpp"

namespace pdl {

namespace {

using Json = nlohmann::ordered_json;

Json to_nlohmann(const Value& v) { return Json::parse(to_json(v)); }

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw BackendError("invalid API base URL '" + url + "'");
  const std::size_t slash = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.path = slash == std::string::npos ? "" : url.substr(slash);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

std::string content_of(const Json& choice, const char* field) {
  if (!choice.contains(field)) return "";
  const Json& m = choice[field];
  if (!m.is_object() || !m.contains("content") || m["content"].is_null()) return "";
  if (!m["content"].is_string()) throw BackendError("malformed response: content is not a string");
  return m["content"].get<std::string>();
}

}  // namespace

HttpChatBackend::HttpChatBackend(Config config) : config_(std::move(config)) {}

HttpChatBackend::Config HttpChatBackend::config_from_env() {
  Config c;
  const char* base = std::getenv("PDL_API_BASE");
  c.base_url = base && *base ? base : "https://api.openai.com/v1";
  if (const char* key = std::getenv("PDL_API_KEY")) c.api_key = key;
  return c;
}

std::string HttpChatBackend::request_body(const ModelRequest& request, bool stream) {
  Json body;
  body["model"] = request.model_id;
  body["messages"] = Json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  for (const auto& [key, value] : request.parameters) body[key] = to_nlohmann(value);
  if (stream) body["stream"] = true;
  return body.dump();
}

std::string HttpChatBackend::generate(const ModelRequest& request, const ChunkCallback& on_chunk) {
  const Endpoint ep = split_url(config_.base_url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  httplib::Request req;
  req.method = "POST";
  req.path = ep.path + "/chat/completions";
  req.headers.emplace("Content-Type", "application/json");
  if (!config_.api_key.empty()) req.headers.emplace("Authorization", "Bearer " + config_.api_key);
  req.body = request_body(request, config_.stream);

  std::string raw;
  std::string line_buffer;
  std::string streamed;
  bool done = false;
  auto handle_line = [&](const std::string& line) {
    if (line.rfind("data:", 0) != 0 || done) return;
    std::string data = line.substr(5);
    if (!data.empty() && data[0] == ' ') data.erase(0, 1);
    if (data == "[DONE]") {
      done = true;
      return;
    }
    Json event;
    try {
      event = Json::parse(data);
    } catch (const Json::exception& e) {
      throw BackendError(std::string("malformed stream event: ") + e.what());
    }
    if (!event.contains("choices") || !event["choices"].is_array() || event["choices"].empty()) return;
    const std::string piece = content_of(event["choices"][0], "delta");
    if (piece.empty()) return;
    streamed += piece;
    if (on_chunk) on_chunk(piece);
  };
  int status = 0;
  req.response_handler = [&](const httplib::Response& r) {
    status = r.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t len, uint64_t, uint64_t) {
    raw.append(data, len);
    if (!config_.stream || status < 200 || status >= 300) return true;
    line_buffer.append(data, len);
    for (std::size_t nl; (nl = line_buffer.find('\n')) != std::string::npos;) {
      std::string line = line_buffer.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      line_buffer.erase(0, nl + 1);
      handle_line(line);
    }
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  if (!client.send(req, res, err)) {
    throw BackendError("request to " + config_.base_url + " failed: " + httplib::to_string(err));
  }
  if (res.status < 200 || res.status >= 300) {
    std::string excerpt = raw.substr(0, 500);
    throw BackendError("model '" + request.model_id + "': HTTP " + std::to_string(res.status) +
                       (excerpt.empty() ? std::string() : ": " + excerpt));
  }
  if (config_.stream) {
    if (!line_buffer.empty()) handle_line(line_buffer);
    return streamed;
  }
  Json body;
  try {
    body = Json::parse(raw);
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed response: ") + e.what());
  }
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw BackendError("malformed response: no choices");
  }
  const std::string text = content_of(body["choices"][0], "message");
  if (on_chunk && !text.empty()) on_chunk(text);
  return text;
}

}  // namespace pdl
