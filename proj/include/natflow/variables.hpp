#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace natflow {

/// Variable name -> value produced by one match or generation, not yet
/// committed anywhere.
using Bindings = std::map<std::string, std::string>;

/// The global store of captured values. Absence means `None`; values are
/// normalized and never empty.
class VariableTable {
 public:
  std::optional<std::string> get(std::string_view key) const;
  bool contains(std::string_view key) const { return get(key).has_value(); }

  // Normalizes `value`; an empty result erases the key.
  void set(const std::string& key, std::string_view value);
  void erase(const std::string& key) { values_.erase(key); }

  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const VariableTable&, const VariableTable&) = default;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Namespace-aware view of a table. Unqualified names resolve inside
/// `ns`; a dotted name (`DF1.TOPIC`) is already a full key. With an empty
/// namespace keys are used unchanged.
struct VariableScope {
  const VariableTable* table = nullptr;
  std::string ns;

  std::string key(std::string_view name) const;
  std::optional<std::string> get(std::string_view name) const;
};

/// Writes `bindings` into `table` under `ns`.
void commit(VariableTable& table, std::string_view ns, const Bindings& bindings);

}  // namespace natflow
