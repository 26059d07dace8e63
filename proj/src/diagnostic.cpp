#include "pdl/diagnostic.hpp"

#include <nlohmann/json.hpp>

namespace pdl {

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& segment : path) {
    out += '/';
    for (char c : segment) {
      if (c == '~') {
        out += "~0";
      } else if (c == '/') {
        out += "~1";
      } else {
        out += c;
      }
    }
  }
  return out;
}

std::string Diagnostic::path_string() const { return join_path(path); }

std::string Diagnostic::format(const std::string& file) const {
  std::string out = file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
  out += severity == Severity::Error ? "error: " : "warning: ";
  out += message;
  if (!path.empty()) out += " [" + path_string() + "]";
  return out;
}

std::string to_json(const std::vector<Diagnostic>& diagnostics) {
  auto array = nlohmann::ordered_json::array();
  for (const auto& d : diagnostics) {
    nlohmann::ordered_json item;
    item["severity"] = d.severity == Severity::Error ? "error" : "warning";
    item["path"] = d.path_string();
    item["message"] = d.message;
    if (d.line > 0) {
      item["line"] = d.line;
      item["column"] = d.column;
    }
    array.push_back(std::move(item));
  }
  return array.dump(2);
}

}  // namespace pdl
