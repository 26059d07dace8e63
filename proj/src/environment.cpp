#include "pdl/environment.hpp"

namespace pdl {

Environment::Environment() {
  auto map = std::make_shared<Map>();
  map->emplace(std::string(kContext), std::make_shared<const Binding>(Binding{Value(""), {}}));
  map_ = std::move(map);
}

const Binding* Environment::lookup(std::string_view name) const {
  auto it = map_->find(name);
  return it == map_->end() ? nullptr : it->second.get();
}

Environment Environment::bind(std::string name, Value value, Contribution contribution) const {
  if (name == kContext) return with_context(std::move(contribution));
  auto map = std::make_shared<Map>(*map_);
  (*map)[std::move(name)] =
      std::make_shared<const Binding>(Binding{std::move(value), std::move(contribution)});
  Environment out;
  out.map_ = std::move(map);
  return out;
}

Environment Environment::with_context(Contribution context) const {
  auto map = std::make_shared<Map>(*map_);
  Value flat(flatten(context));
  (*map)[std::string(kContext)] =
      std::make_shared<const Binding>(Binding{std::move(flat), std::move(context)});
  Environment out;
  out.map_ = std::move(map);
  return out;
}

std::vector<std::string> Environment::names() const {
  std::vector<std::string> out;
  out.reserve(map_->size());
  for (const auto& [name, _] : *map_) out.push_back(name);
  return out;
}

}  // namespace pdl
