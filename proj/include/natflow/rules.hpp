#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natflow/ast.hpp"
#include "natflow/flow.hpp"
#include "natflow/knowledge.hpp"
#include "natflow/variables.hpp"

namespace natflow {

struct UpdateRule {
  std::size_t id = 0;  // declaration order
  NatexAst precondition;
  NatexAst postcondition;
  std::optional<double> priority;  // present => the rule proposes a response
  std::string precondition_source;
  std::string postcondition_source;  // without the priority suffix
  std::string path;
};

/// Splits a trailing `(real)` off a postcondition. `ok (abc)` has no
/// priority; `ok (1.5x)` looks numeric but is malformed and throws
/// FlowError(Schema).
std::pair<std::string, std::optional<double>> split_priority(std::string_view postcondition,
                                                             const std::string& path = {});

/// `{"<precondition>": "<postcondition>", ...}` in declaration order.
/// `base_path` prefixes the JSON paths in errors (`/rules` when embedded).
std::vector<UpdateRule> parse_rules(std::string_view document, const std::string& base_path = {});

struct Candidate {
  std::string text;
  double priority = 0.0;
  std::size_t rule = 0;
};

struct RulePassResult {
  std::vector<std::size_t> fired;
  Bindings committed;  // unqualified names, as committed into the session namespace
  std::optional<Candidate> candidate;
  std::size_t scans = 0;
};

/// One pass over `rules` for a user turn. Bindings are committed to the
/// session as rules fire so later preconditions see them. NATEX errors
/// propagate with the rule id as location.
RulePassResult evaluate(const std::vector<UpdateRule>& rules, const FunctionRegistry& registry,
                        std::string_view input, Session& session);

enum class Decision { UseCandidate, UseStateMachine };

std::string_view to_string(Decision decision) noexcept;

/// The candidate wins only when strictly above every system transition the
/// state machine could take next.
Decision arbitrate(const std::optional<Candidate>& candidate, double system_max) noexcept;

}  // namespace natflow
