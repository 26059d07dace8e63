#pragma once

#include <string>
#include <utility>
#include <vector>

namespace pdl {

/// One role-tagged entry of the background context.
struct Message {
  std::string role;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

/// The messages a block appends to the background context. Its flattened
/// string is the block's contribution in string form.
struct Contribution {
  std::vector<Message> messages;

  Contribution() = default;
  explicit Contribution(std::vector<Message> m) : messages(std::move(m)) {}
  static Contribution single(std::string role, std::string content) {
    return Contribution({Message{std::move(role), std::move(content)}});
  }

  bool empty() const { return messages.empty(); }
  void append(const Contribution& other) {
    messages.insert(messages.end(), other.messages.begin(), other.messages.end());
  }

  friend Contribution operator+(Contribution a, const Contribution& b) {
    a.append(b);
    return a;
  }
  friend bool operator==(const Contribution&, const Contribution&) = default;
};

/// Concatenation of message contents in order.
inline std::string flatten(const Contribution& contribution) {
  std::string out;
  for (const auto& m : contribution.messages) out += m.content;
  return out;
}

}  // namespace pdl
