#include "pdl/trace.hpp"

#include <nlohmann/json.hpp>

#include "pdl/error.hpp"

namespace pdl {

namespace {

using Json = nlohmann::ordered_json;

Json node_json(const TraceNode& n) {
  Json j;
  j["kind"] = n.kind;
  j["doc_path"] = n.doc_path;
  j["role"] = n.role;
  if (n.def) j["def"] = *n.def;
  j["defs_bound"] = n.defs_bound;
  if (n.parser) j["parser"] = *n.parser;
  if (n.spec) j["spec"] = *n.spec;
  j["result_preview"] = n.result_preview;
  if (n.result_truncated) j["result_truncated"] = true;
  j["contribution_preview"] = n.contribution_preview;
  if (n.contribution_truncated) j["contribution_truncated"] = true;
  j["timing_ms"] = n.timing_ms ? Json(*n.timing_ms) : Json(nullptr);
  if (n.error) j["error"] = *n.error;
  j["children"] = Json::array();
  for (const auto& c : n.children) j["children"].push_back(node_json(c));
  return j;
}

}  // namespace

TraceRecorder::TraceRecorder(bool timing) : timing_(timing) {
  root_.kind = "program";
  stack_.push_back(&root_);
  started_.push_back(std::chrono::steady_clock::now());
}

TraceNode& TraceRecorder::enter(std::string kind, std::string doc_path, std::string role) {
  TraceNode& parent = *stack_.back();
  parent.children.emplace_back();
  TraceNode& node = parent.children.back();
  node.kind = std::move(kind);
  node.doc_path = std::move(doc_path);
  node.role = std::move(role);
  stack_.push_back(&node);
  started_.push_back(std::chrono::steady_clock::now());
  return node;
}

void TraceRecorder::leave(const Value* result, const std::string* contribution, const std::string* error) {
  if (stack_.empty()) return;
  TraceNode& node = *stack_.back();
  if (result) {
    node.result_preview = preview(*result);
    node.result_truncated = truncate(node.result_preview);
  }
  if (contribution) {
    node.contribution_preview = *contribution;
    node.contribution_truncated = truncate(node.contribution_preview);
  }
  if (error) node.error = *error;
  if (timing_) {
    node.timing_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started_.back()).count();
  }
  if (stack_.size() == 1) return;
  stack_.pop_back();
  started_.pop_back();
}

std::string TraceRecorder::to_json() const {
  Json doc;
  doc["version"] = "pdl-trace/1";
  doc["root"] = node_json(root_);
  return doc.dump(2) + "\n";
}

std::string TraceRecorder::preview(const Value& v) {
  if (v.is_string()) return v.as_string();
  try {
    return pdl::to_json(v);
  } catch (const Error&) {
    return "<function>";
  }
}

bool TraceRecorder::truncate(std::string& text, std::size_t limit) {
  if (text.size() <= limit) return false;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  text.resize(cut);
  return true;
}

}  // namespace pdl
