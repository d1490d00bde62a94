#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "natflow/ast.hpp"
#include "natflow/diagnostic.hpp"
#include "natflow/variables.hpp"

namespace natflow {

enum class ResultKind { StringSet, Text, Bool };

std::string_view to_string(ResultKind kind) noexcept;

/// Value returned by a NATEX function: a set of phrases, one string, or a
/// truth value.
class FunctionResult {
 public:
  using StringSet = std::set<std::string>;

  static FunctionResult strings(StringSet values);
  static FunctionResult text(std::string value);
  static FunctionResult boolean(bool value);

  ResultKind kind() const noexcept;
  const StringSet& as_strings() const { return std::get<StringSet>(value_); }
  const std::string& as_text() const { return std::get<std::string>(value_); }
  bool as_bool() const { return std::get<bool>(value_); }

  friend bool operator==(const FunctionResult&, const FunctionResult&) = default;

 private:
  explicit FunctionResult(std::variant<StringSet, std::string, bool> value) : value_(std::move(value)) {}
  std::variant<StringSet, std::string, bool> value_;
};

/// What a user function sees when it is called.
struct FunctionCall {
  std::string_view name;
  std::vector<std::string> arguments;       // argument text after evaluation
  std::span<const NatexAst> raw_arguments;  // the argument ASTs as written
  const VariableScope& variables;
  std::string_view utterance;  // normalized input; empty while generating
};

using UserFunction = std::function<FunctionResult(const FunctionCall&)>;

/// Directed acyclic graph of labels, queried by `#ONT`.
class Ontology {
 public:
  using Edges = std::vector<std::pair<std::string, std::vector<std::string>>>;

  Ontology() = default;

  /// Builds the graph from parent -> children lists. Throws
  /// FlowError(CycleDetected) naming a node on a cycle.
  static Ontology from_edges(const Edges& edges);

  std::size_t size() const noexcept { return labels_.size(); }
  bool contains(std::string_view label) const { return index_.find(label) != index_.end(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::vector<std::string> children(std::string_view label) const;

  /// Every label reachable through one or more edges.
  std::set<std::string> descendants(std::string_view label) const;

 private:
  std::size_t intern(const std::string& label);

  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> children_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Parses `{"ontology": {"<parent>": ["<child>", ...], ...}}`.
Ontology load_ontology(std::string_view document);

/// Strict descendants of `label`. Unknown labels give an empty set and, when
/// `warnings` is given, a warning.
std::set<std::string> ont_query(const Ontology& ontology, std::string_view label,
                                std::vector<Diagnostic>* warnings = nullptr);

/// Names and implementations of every callable function. The built-ins
/// `ONT`, `ASSIGN` and `IF` are always present; they are evaluated by the
/// NATEX evaluator since they need access to generation and pending state.
class FunctionRegistry {
 public:
  struct Entry {
    ResultKind declared;
    UserFunction function;
  };

  FunctionRegistry() = default;

  static bool is_builtin(std::string_view name) noexcept;

  /// Throws std::invalid_argument for duplicates and built-in names.
  void add(const std::string& name, ResultKind declared, UserFunction function);

  bool contains(std::string_view name) const;
  const Entry* find(std::string_view name) const;
  std::set<std::string> names() const;

  void set_ontology(std::shared_ptr<const Ontology> ontology) { ontology_ = std::move(ontology); }
  const Ontology* ontology() const noexcept { return ontology_.get(); }

 private:
  std::map<std::string, Entry, std::less<>> functions_;
  std::shared_ptr<const Ontology> ontology_;
};

/// Stub lookup function returning a fixed phrase set (the `#MDB`/`#PET`
/// style "database").
UserFunction word_list_function(FunctionResult::StringSet words);

/// Reads a JSON array of strings.
FunctionResult::StringSet load_word_list(const std::filesystem::path& path);

}  // namespace natflow
