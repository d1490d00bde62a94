#include "natflow/variables.hpp"

#include "natflow/text.hpp"

namespace natflow {

std::optional<std::string> VariableTable::get(std::string_view key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

void VariableTable::set(const std::string& key, std::string_view value) {
  std::string normalized = normalize(value);
  if (normalized.empty()) {
    values_.erase(key);
  } else {
    values_[key] = std::move(normalized);
  }
}

std::string VariableScope::key(std::string_view name) const {
  if (ns.empty() || name.find('.') != std::string_view::npos) return std::string(name);
  std::string out = ns;
  out += '.';
  out += name;
  return out;
}

std::optional<std::string> VariableScope::get(std::string_view name) const {
  if (table == nullptr) return std::nullopt;
  return table->get(key(name));
}

void commit(VariableTable& table, std::string_view ns, const Bindings& bindings) {
  const VariableScope scope{&table, std::string(ns)};
  for (const auto& [name, value] : bindings) table.set(scope.key(name), value);
}

}  // namespace natflow
