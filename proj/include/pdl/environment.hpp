#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pdl/context.hpp"
#include "pdl/value.hpp"

namespace pdl {

/// What a name is bound to: the value and the contribution that produced it.
struct Binding {
  Value value;
  Contribution contribution;
};

/// Persistent name -> Binding map. Every update returns a new environment
/// and leaves the original untouched; unchanged bindings are shared.
///
/// The reserved name "context" is always bound. Its contribution is the
/// background context's message list and its value is the flattened string.
class Environment {
 public:
  static constexpr std::string_view kContext = "context";

  Environment();

  const Binding* lookup(std::string_view name) const;
  Environment bind(std::string name, Value value, Contribution contribution) const;
  Environment with_context(Contribution context) const;

  const Contribution& context() const { return lookup(kContext)->contribution; }

  /// Names in sorted order, including "context".
  std::vector<std::string> names() const;

 private:
  using Map = std::map<std::string, std::shared_ptr<const Binding>, std::less<>>;
  std::shared_ptr<const Map> map_;
};

}  // namespace pdl
