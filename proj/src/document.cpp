#include "natflow/document.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace natflow {

using json = nlohmann::ordered_json;

namespace {

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Kind::Schema, "", what + " is not valid JSON: " + e.what());
  }
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& relative) {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

UserFunction failing_function(std::string message) {
  return [message = std::move(message)](const FunctionCall&) -> FunctionResult {
    throw std::runtime_error(message);
  };
}

void add_function(FunctionRegistry& registry, const std::string& name, const json& value,
                  const std::filesystem::path& base_dir) {
  const std::string path = "/functions/" + name;
  auto schema = [&](const std::string& msg) { return FlowError(FlowError::Kind::Schema, path, msg); };
  if (FunctionRegistry::is_builtin(name)) throw schema("'" + name + "' is a built-in function");

  if (value.is_array()) {
    FunctionResult::StringSet words;
    for (const auto& w : value) {
      if (!w.is_string()) throw schema("phrase sets hold strings");
      words.insert(w.get<std::string>());
    }
    registry.add(name, ResultKind::StringSet, word_list_function(std::move(words)));
  } else if (value.is_string()) {
    registry.add(name, ResultKind::StringSet,
                 word_list_function(load_word_list(resolve_path(base_dir, value.get<std::string>()))));
  } else if (value.is_object() && value.size() == 1 && value.contains("text") && value["text"].is_string()) {
    const std::string text = value["text"].get<std::string>();
    registry.add(name, ResultKind::Text, [text](const FunctionCall&) { return FunctionResult::text(text); });
  } else if (value.is_object() && value.size() == 1 && value.contains("bool") && value["bool"].is_boolean()) {
    const bool flag = value["bool"].get<bool>();
    registry.add(name, ResultKind::Bool, [flag](const FunctionCall&) { return FunctionResult::boolean(flag); });
  } else if (value.is_object() && value.size() == 1 && value.contains("fail") && value["fail"].is_string()) {
    registry.add(name, ResultKind::StringSet, failing_function(value["fail"].get<std::string>()));
  } else {
    throw schema("expected a phrase array, a file name, or one of {\"text\"}, {\"bool\"}, {\"fail\"}");
  }
}

std::shared_ptr<const Ontology> load_ontology_value(const json& value, const std::filesystem::path& base_dir) {
  if (value.is_string()) {
    return std::make_shared<Ontology>(load_ontology(read_file(resolve_path(base_dir, value.get<std::string>()))));
  }
  if (value.is_object()) {
    json wrapped = json::object();
    wrapped["ontology"] = value;
    return std::make_shared<Ontology>(load_ontology(wrapped.dump()));
  }
  throw FlowError(FlowError::Kind::Schema, "/ontology", "expected a mapping or a file name");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FlowError(FlowError::Kind::Schema, path.string(), "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Module load_module(std::string_view document, const std::filesystem::path& base_dir, std::string ns,
                   std::string source) {
  const json root = parse_json(document, "flow");
  if (!root.is_object()) throw FlowError(FlowError::Kind::Schema, "", "flow document must be a JSON object");

  auto registry = std::make_shared<FunctionRegistry>();
  if (root.contains("functions")) {
    const json& fns = root["functions"];
    if (!fns.is_object()) throw FlowError(FlowError::Kind::Schema, "/functions", "expected an object");
    for (const auto& [name, value] : fns.items()) add_function(*registry, name, value, base_dir);
  }
  if (root.contains("ontology")) registry->set_ontology(load_ontology_value(root["ontology"], base_dir));

  std::vector<UpdateRule> rules;
  if (root.contains("rules")) {
    if (!root["rules"].is_object()) throw FlowError(FlowError::Kind::Schema, "/rules", "expected an object");
    rules = parse_rules(root["rules"].dump(), "/rules");
  }
  std::set<std::string> rule_assigned;
  for (const auto& r : rules) {
    collect_assignments(r.precondition, rule_assigned);
    collect_assignments(r.postcondition, rule_assigned);
  }
  DialogueFlow flow = load_flow(document, registry, rule_assigned);
  return Module{std::move(ns), std::move(flow), std::move(rules), std::move(source)};
}

bool is_manifest(std::string_view document) {
  const json root = json::parse(document, nullptr, false);
  if (!root.is_object() || !root.contains("modules") || !root["modules"].is_object()) return false;
  for (const auto& [key, value] : root.items()) {
    if (key != "start" && key != "modules" && key != "cross") return false;
  }
  return true;
}

CompositeFlow load_system_text(std::string_view document, const std::filesystem::path& base_dir,
                               std::string source) {
  if (!is_manifest(document)) {
    Module m = load_module(document, base_dir, "", source);
    return CompositeFlow::single(std::move(m.flow), std::move(m.rules), std::move(m.source));
  }
  const json root = parse_json(document, "manifest");
  CompositeFlow system;
  for (const auto& [ns, file] : root["modules"].items()) {
    if (!file.is_string()) throw FlowError(FlowError::Kind::Schema, "/modules/" + ns, "expected a file name");
    const std::filesystem::path path = resolve_path(base_dir, file.get<std::string>());
    Module m;
    try {
      m = load_module(read_file(path), path.parent_path(), ns, path.string());
    } catch (const FlowError& e) {
      // Keep the module's own JSON path but say which module it came from.
      if (e.natex_diagnostic()) throw FlowError(ns + ":" + e.path(), NatexError(*e.natex_diagnostic()));
      throw FlowError(e.kind(), ns + ":" + e.path(), e.message());
    }
    system.add_module(ns, std::move(m.flow), std::move(m.rules), std::move(m.source));
  }
  if (system.modules().empty()) throw FlowError(FlowError::Kind::Schema, "/modules", "manifest lists no modules");
  if (root.contains("start")) {
    if (!root["start"].is_string()) throw FlowError(FlowError::Kind::Schema, "/start", "expected a qualified state");
    system.set_start(root["start"].get<std::string>(), "/start");
  }
  if (root.contains("cross")) {
    const json& cross = root["cross"];
    if (!cross.is_array()) throw FlowError(FlowError::Kind::Schema, "/cross", "expected an array");
    for (std::size_t i = 0; i < cross.size(); ++i) {
      const std::string path = "/cross/" + std::to_string(i);
      const json& c = cross[i];
      if (!c.is_object() || !c.contains("from") || !c.contains("to") || !c.contains("natex") ||
          !c["from"].is_string() || !c["to"].is_string() || !c["natex"].is_string()) {
        throw FlowError(FlowError::Kind::Schema, path, "expected {\"from\", \"to\", \"natex\"} strings");
      }
      double priority = DialogueFlow::kDefaultPriority;
      if (c.contains("priority")) {
        if (!c["priority"].is_number()) throw FlowError(FlowError::Kind::Schema, path + "/priority", "expected a number");
        priority = c["priority"].get<double>();
      }
      system.add_cross_transition(c["from"].get<std::string>(), c["to"].get<std::string>(),
                                  c["natex"].get<std::string>(), priority, path);
    }
  }
  return system;
}

std::shared_ptr<const CompositeFlow> load_system(const std::filesystem::path& path) {
  return std::make_shared<const CompositeFlow>(load_system_text(read_file(path), path.parent_path(), path.string()));
}

}  // namespace natflow
