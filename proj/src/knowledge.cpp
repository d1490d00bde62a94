#include "natflow/knowledge.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace natflow {

using json = nlohmann::ordered_json;

std::string_view to_string(ResultKind kind) noexcept {
  switch (kind) {
    case ResultKind::StringSet: return "StringSet";
    case ResultKind::Text: return "Text";
    case ResultKind::Bool: return "Bool";
  }
  return "Unknown";
}

FunctionResult FunctionResult::strings(StringSet values) {
  values.erase("");
  return FunctionResult(std::move(values));
}
FunctionResult FunctionResult::text(std::string value) { return FunctionResult(std::move(value)); }
FunctionResult FunctionResult::boolean(bool value) { return FunctionResult(value); }

ResultKind FunctionResult::kind() const noexcept {
  switch (value_.index()) {
    case 0: return ResultKind::StringSet;
    case 1: return ResultKind::Text;
    default: return ResultKind::Bool;
  }
}

// ---------------------------------------------------------------------------
// Ontology

std::size_t Ontology::intern(const std::string& label) {
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  const std::size_t id = labels_.size();
  labels_.push_back(label);
  children_.emplace_back();
  index_.emplace(label, id);
  return id;
}

Ontology Ontology::from_edges(const Edges& edges) {
  Ontology o;
  for (const auto& [parent, kids] : edges) {
    const std::size_t p = o.intern(parent);
    for (const auto& kid : kids) {
      const std::size_t c = o.intern(kid);
      o.children_[p].push_back(c);
    }
  }

  // Iterative three-colour DFS; a grey target is a back edge.
  enum : char { White, Grey, Black };
  std::vector<char> colour(o.labels_.size(), White);
  for (std::size_t root = 0; root < o.labels_.size(); ++root) {
    if (colour[root] != White) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    colour[root] = Grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < o.children_[node].size()) {
        const std::size_t child = o.children_[node][next++];
        if (colour[child] == Grey) {
          throw FlowError(FlowError::Kind::CycleDetected, "/ontology/" + o.labels_[child],
                          "ontology cycle through '" + o.labels_[child] + "'");
        }
        if (colour[child] == White) {
          colour[child] = Grey;
          stack.emplace_back(child, 0);
        }
      } else {
        colour[node] = Black;
        stack.pop_back();
      }
    }
  }
  return o;
}

std::vector<std::string> Ontology::children(std::string_view label) const {
  std::vector<std::string> out;
  if (auto it = index_.find(label); it != index_.end()) {
    for (const std::size_t c : children_[it->second]) out.push_back(labels_[c]);
  }
  return out;
}

std::set<std::string> Ontology::descendants(std::string_view label) const {
  std::set<std::string> out;
  auto it = index_.find(label);
  if (it == index_.end()) return out;
  std::vector<bool> seen(labels_.size(), false);
  std::vector<std::size_t> stack(children_[it->second].begin(), children_[it->second].end());
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (seen[node]) continue;
    seen[node] = true;
    out.insert(labels_[node]);
    for (const std::size_t c : children_[node]) stack.push_back(c);
  }
  return out;
}

Ontology load_ontology(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Kind::Schema, "", std::string("ontology is not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("ontology") || !root["ontology"].is_object()) {
    throw FlowError(FlowError::Kind::Schema, "/ontology", "expected an object under \"ontology\"");
  }
  Ontology::Edges edges;
  for (const auto& [parent, kids] : root["ontology"].items()) {
    const std::string path = "/ontology/" + parent;
    if (parent.empty()) throw FlowError(FlowError::Kind::Schema, path, "empty ontology label");
    if (!kids.is_array()) throw FlowError(FlowError::Kind::Schema, path, "children must be an array of strings");
    std::vector<std::string> names;
    for (const auto& kid : kids) {
      if (!kid.is_string() || kid.get<std::string>().empty()) {
        throw FlowError(FlowError::Kind::Schema, path, "children must be non-empty strings");
      }
      names.push_back(kid.get<std::string>());
    }
    edges.emplace_back(parent, std::move(names));
  }
  return Ontology::from_edges(edges);
}

std::set<std::string> ont_query(const Ontology& ontology, std::string_view label,
                                std::vector<Diagnostic>* warnings) {
  if (!ontology.contains(label)) {
    if (warnings != nullptr) {
      warnings->push_back(make_warning(DiagCode::FunctionFailure,
                                       "ontology has no node '" + std::string(label) + "'"));
    }
    return {};
  }
  return ontology.descendants(label);
}

// ---------------------------------------------------------------------------
// Registry

bool FunctionRegistry::is_builtin(std::string_view name) noexcept {
  return name == "ONT" || name == "ASSIGN" || name == "IF";
}

void FunctionRegistry::add(const std::string& name, ResultKind declared, UserFunction function) {
  if (is_builtin(name)) throw std::invalid_argument("cannot redefine built-in #" + name);
  if (!functions_.emplace(name, Entry{declared, std::move(function)}).second) {
    throw std::invalid_argument("function #" + name + " already registered");
  }
}

bool FunctionRegistry::contains(std::string_view name) const {
  return is_builtin(name) || functions_.find(name) != functions_.end();
}

const FunctionRegistry::Entry* FunctionRegistry::find(std::string_view name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

std::set<std::string> FunctionRegistry::names() const {
  std::set<std::string> out{"ONT", "ASSIGN", "IF"};
  for (const auto& [name, entry] : functions_) out.insert(name);
  return out;
}

UserFunction word_list_function(FunctionResult::StringSet words) {
  return [words = std::move(words)](const FunctionCall&) { return FunctionResult::strings(words); };
}

FunctionResult::StringSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FlowError(FlowError::Kind::Schema, path.string(), "cannot open word list");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Kind::Schema, path.string(), std::string("word list is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FlowError(FlowError::Kind::Schema, path.string(), "word list must be a JSON array");
  FunctionResult::StringSet out;
  for (const auto& item : doc) {
    if (!item.is_string()) throw FlowError(FlowError::Kind::Schema, path.string(), "word list entries must be strings");
    out.insert(item.get<std::string>());
  }
  return out;
}

}  // namespace natflow
