#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "natflow/ast.hpp"
#include "natflow/compile.hpp"
#include "natflow/knowledge.hpp"
#include "natflow/variables.hpp"

namespace natflow {

enum class Speaker { User, System };

std::string_view to_string(Speaker speaker) noexcept;

struct Transition {
  std::size_t index = 0;
  std::string source;
  // Local state id; for cross-module transitions `target_namespace` is set
  // and `target` is local to that namespace.
  std::string target;
  std::optional<std::string> target_namespace;
  Speaker speaker = Speaker::User;
  NatexAst natex;  // empty for error transitions
  std::string natex_source;
  double priority = 1.0;
  bool is_error = false;
  std::string path;  // JSON path of the defining key
};

struct State {
  std::string id;
  Speaker speaker = Speaker::System;
  std::vector<std::size_t> outgoing;  // excludes the error transition
  std::optional<std::size_t> error_transition;
};

/// Directed graph of alternating user/system states with NATEX-labelled
/// transitions. Immutable once loaded.
class DialogueFlow {
 public:
  static constexpr std::string_view kTerminal = "end";
  static constexpr std::string_view kDefaultInitial = "start";
  static constexpr double kDefaultPriority = 1.0;
  static constexpr double kErrorPriority = -std::numeric_limits<double>::infinity();

  const std::string& initial_state() const noexcept { return initial_; }
  const State* find_state(std::string_view id) const;
  const std::map<std::string, State, std::less<>>& states() const noexcept { return states_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }

  std::vector<const Transition*> outgoing(std::string_view state) const;
  const Transition* error_transition(std::string_view state) const;

  /// Highest priority among outgoing system transitions; -inf when none.
  double max_system_priority(std::string_view state) const;

  const FunctionRegistry& registry() const noexcept { return *registry_; }
  std::shared_ptr<const FunctionRegistry> registry_ptr() const noexcept { return registry_; }

  /// Static-check findings (unknown functions, unbound variables), each
  /// located by JSON path.
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }
  std::set<std::string> assigned_variables() const;

 private:
  friend class FlowBuilder;

  std::string initial_;
  std::map<std::string, State, std::less<>> states_;
  std::vector<Transition> transitions_;
  std::shared_ptr<const FunctionRegistry> registry_;
  std::vector<Diagnostic> diagnostics_;
};

/// Keys at the document root that are not transitions.
bool is_reserved_root_key(std::string_view key) noexcept;

/// Loads the nested-object flow format. Throws FlowError for schema
/// problems, dangling gotos and NATEX syntax errors (with JSON path).
/// `extra_assignable` lists variables assigned elsewhere (update rules).
DialogueFlow load_flow(std::string_view document, std::shared_ptr<const FunctionRegistry> registry = nullptr,
                       const std::set<std::string>& extra_assignable = {});

struct ErrorRecord {
  std::int64_t turn = 0;
  std::string state;
  std::string input;
};

/// `{"turn":3,"state":"c","input":"asdf"}`
std::string to_json_line(const ErrorRecord& record);

/// Append-only record of inputs that fell through to an error transition.
/// Optionally mirrored to a JSON-lines file. Safe to share across sessions.
class ErrorLog {
 public:
  ErrorLog() = default;
  explicit ErrorLog(std::filesystem::path file) : file_(std::move(file)) {}

  /// Returns the line; a failed file write becomes a warning.
  std::string append(const ErrorRecord& record, std::vector<Diagnostic>* warnings = nullptr);
  std::vector<ErrorRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::optional<std::filesystem::path> file_;
  std::vector<ErrorRecord> records_;
};

/// Per-conversation mutable state.
struct Session {
  explicit Session(std::uint64_t seed = 0) : rng(seed) {}

  std::string ns;  // active namespace, empty for a bare flow
  std::string state;
  VariableTable variables;
  std::map<std::string, std::int64_t> last_taken;  // system transition -> turn
  std::int64_t turn = 0;
  Rng rng;
  std::shared_ptr<ErrorLog> error_log;
  std::vector<Diagnostic> warnings;
  bool ended = false;

  VariableScope scope() const { return {&variables, ns}; }
  std::string qualified_state() const { return ns.empty() ? state : ns + "." + state; }
};

Session start_session(const DialogueFlow& flow, std::uint64_t seed, std::shared_ptr<ErrorLog> log = nullptr);

enum class OutcomeKind { Matched, ErrorTransition, RuleResponse };

std::string_view to_string(OutcomeKind kind) noexcept;

struct TurnOutcome {
  OutcomeKind kind = OutcomeKind::Matched;
  const Transition* transition = nullptr;
  Bindings committed;
  std::string text;   // system turns
  std::string input;  // the unmatched input of an error transition
};

/// The transition a user turn would take, computed without side effects
/// other than RNG draws.
struct UserTurnPlan {
  const Transition* transition = nullptr;
  Bindings bindings;
  bool is_error = false;
};

UserTurnPlan plan_user_turn(const DialogueFlow& flow, Session& session, std::string_view input,
                            std::span<const Transition* const> extra = {});
TurnOutcome commit_user_turn(Session& session, const UserTurnPlan& plan, std::string_view input);

/// Matches `input` against the outgoing user transitions (plus `extra`),
/// takes the best one or the error transition, and commits its bindings.
TurnOutcome user_turn(const DialogueFlow& flow, Session& session, std::string_view input,
                      std::span<const Transition* const> extra = {});

/// Picks a system transition (max priority, least recently taken, then
/// uniform) and generates its text.
TurnOutcome system_turn(const DialogueFlow& flow, Session& session);

/// Appends `{"turn","state","input"}` to the session's error log.
std::string log_error(Session& session, std::string_view state, std::string_view input, std::int64_t turn);

/// True when the conversation can continue with user input.
bool awaiting_user(const DialogueFlow& flow, const Session& session);

}  // namespace natflow
