#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "pdl/value.hpp"

namespace pdl {

struct TraceNode {
  std::string kind;
  std::string doc_path;
  std::string role;
  std::optional<std::string> def;
  std::vector<std::string> defs_bound;
  std::optional<std::string> parser;
  std::optional<std::string> spec;
  std::string result_preview;
  bool result_truncated = false;
  std::string contribution_preview;
  bool contribution_truncated = false;
  std::optional<double> timing_ms;
  std::optional<std::string> error;
  std::vector<TraceNode> children;
};

/// Collects one node per evaluated block, nested as evaluation nests.
class TraceRecorder {
 public:
  static constexpr std::size_t kPreviewLimit = 2048;

  explicit TraceRecorder(bool timing = false);

  /// Opens a child of the innermost open node and returns it.
  TraceNode& enter(std::string kind, std::string doc_path, std::string role);
  /// Closes the innermost open node; with only the root open, records the
  /// outcome of the whole program.
  void leave(const Value* result, const std::string* contribution, const std::string* error);

  const TraceNode& root() const { return root_; }
  /// {"version": "pdl-trace/1", "root": {...}}, indented, key order fixed.
  std::string to_json() const;

  /// Preview text of a value: strings verbatim, closures as "<function>",
  /// everything else as JSON.
  static std::string preview(const Value& v);
  /// Cuts `text` to at most `limit` bytes on a UTF-8 boundary.
  static bool truncate(std::string& text, std::size_t limit = kPreviewLimit);

 private:
  bool timing_;
  TraceNode root_;
  std::vector<TraceNode*> stack_;
  std::vector<std::chrono::steady_clock::time_point> started_;
};

}  // namespace pdl
