#include "natflow/rules.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

#include "natflow/compile.hpp"

namespace natflow {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) {
  s = trim_right(s);
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

bool looks_numeric(std::string_view s) {
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
  if (!s.empty() && s.front() == '.') s.remove_prefix(1);
  return !s.empty() && s.front() >= '0' && s.front() <= '9';
}

std::string rule_path(const std::string& base, const std::string& key) {
  std::string out = base + "/";
  for (const char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::pair<std::string, std::optional<double>> split_priority(std::string_view postcondition,
                                                             const std::string& path) {
  const std::string_view body = trim_right(postcondition);
  if (body.empty() || body.back() != ')') return {std::string(postcondition), std::nullopt};
  const auto open = body.rfind('(');
  if (open == std::string_view::npos) return {std::string(postcondition), std::nullopt};
  // An escaped paren is text.
  std::size_t slashes = 0;
  for (std::size_t i = open; i > 0 && body[i - 1] == '\\'; --i) ++slashes;
  if (slashes % 2 == 1) return {std::string(postcondition), std::nullopt};

  const std::string_view inner = trim(body.substr(open + 1, body.size() - open - 2));
  if (!looks_numeric(inner)) return {std::string(postcondition), std::nullopt};
  std::string_view digits = inner;
  if (digits.front() == '+') digits.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || end != digits.data() + digits.size() || !std::isfinite(value)) {
    throw FlowError(FlowError::Kind::Schema, path, "malformed priority '(" + std::string(inner) + ")'");
  }
  return {std::string(trim_right(body.substr(0, open))), value};
}

std::vector<UpdateRule> parse_rules(std::string_view document, const std::string& base_path) {
  using json = nlohmann::ordered_json;
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Kind::Schema, base_path, std::string("rules are not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw FlowError(FlowError::Kind::Schema, base_path, "rules must be a JSON object");

  std::vector<UpdateRule> rules;
  for (const auto& [key, value] : root.items()) {
    const std::string path = rule_path(base_path, key);
    if (!value.is_string()) throw FlowError(FlowError::Kind::Schema, path, "postcondition must be a string");
    UpdateRule rule;
    rule.id = rules.size();
    rule.path = path;
    rule.precondition_source = key;
    auto [post, priority] = split_priority(value.get<std::string>(), path);
    rule.postcondition_source = std::move(post);
    rule.priority = priority;
    try {
      rule.precondition = parse(rule.precondition_source);
    } catch (const NatexError& e) {
      throw FlowError(path, e);
    }
    try {
      rule.postcondition = parse(rule.postcondition_source);
    } catch (const NatexError& e) {
      throw FlowError(path, e);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

RulePassResult evaluate(const std::vector<UpdateRule>& rules, const FunctionRegistry& registry,
                        std::string_view input, Session& session) {
  RulePassResult result;
  const std::string utterance = normalize(input);
  std::vector<bool> fired(rules.size(), false);
  bool progress = true;
  while (progress) {
    progress = false;
    ++result.scans;
    for (const auto& rule : rules) {
      if (fired[rule.id]) continue;
      const EvalEnv env{&registry, session.scope(), &session.warnings};
      try {
        const MatchResult m = run_matcher(compile_matcher(rule.precondition, env, utterance));
        if (!m.matched) continue;
        // Captures are visible to the postcondition but only stick if it fires.
        VariableTable scratch = session.variables;
        commit(scratch, session.ns, m.bindings);
        const EvalEnv post_env{&registry, VariableScope{&scratch, session.ns}, &session.warnings};
        auto generated = generate(rule.postcondition, post_env, session.rng);
        if (!generated) continue;

        fired[rule.id] = true;
        result.fired.push_back(rule.id);
        Bindings all = m.bindings;
        for (const auto& [k, v] : generated->assignments) all[k] = v;
        commit(session.variables, session.ns, all);
        for (const auto& [k, v] : all) result.committed[k] = normalize(v);
        if (rule.priority) {
          result.candidate = Candidate{std::move(generated->text), *rule.priority, rule.id};
          return result;
        }
      } catch (const NatexError& e) {
        throw e.located("rule " + std::to_string(rule.id) + " " + rule.path);
      }
      progress = true;
      break;
    }
  }
  return result;
}

std::string_view to_string(Decision decision) noexcept {
  return decision == Decision::UseCandidate ? "UseCandidate" : "UseStateMachine";
}

Decision arbitrate(const std::optional<Candidate>& candidate, double system_max) noexcept {
  return candidate && candidate->priority > system_max ? Decision::UseCandidate : Decision::UseStateMachine;
}

}  // namespace natflow
