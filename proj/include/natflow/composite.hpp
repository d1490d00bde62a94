#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natflow/flow.hpp"
#include "natflow/rules.hpp"

namespace natflow {

struct Module {
  std::string ns;
  DialogueFlow flow;
  std::vector<UpdateRule> rules;
  std::string source;  // file the module came from, for messages
};

struct QualifiedState {
  std::string ns;
  std::string state;

  std::string str() const { return ns.empty() ? state : ns + "." + state; }
};

/// Flows combined under unique namespaces. A bare flow is the special case
/// of one module with the empty namespace.
class CompositeFlow {
 public:
  static CompositeFlow single(DialogueFlow flow, std::vector<UpdateRule> rules = {}, std::string source = {});

  /// Throws FlowError(DuplicateNamespace) or FlowError(Schema) for names
  /// that are empty or dotted.
  void add_module(std::string ns, DialogueFlow flow, std::vector<UpdateRule> rules = {}, std::string source = {});

  /// `DF1.start`; must name a system state.
  void set_start(std::string_view qualified, const std::string& path = {});

  /// User transition from one module's user state into another module's
  /// system state. `path` locates the declaration in error messages.
  const Transition& add_cross_transition(std::string_view from, std::string_view to, std::string_view natex,
                                         double priority = DialogueFlow::kDefaultPriority,
                                         const std::string& path = {});

  /// Splits and checks `NS.state`; throws FlowError(UnknownState).
  QualifiedState resolve(std::string_view qualified, const std::string& path = {}) const;

  const Module* module(std::string_view ns) const;
  const Module& module_at(std::string_view ns) const;
  std::vector<const Module*> modules() const;
  const QualifiedState& start() const noexcept { return start_; }
  const std::deque<Transition>& cross_transitions() const noexcept { return cross_; }
  std::vector<const Transition*> cross_from(std::string_view ns, std::string_view state) const;
  // Namespace a cross transition's source state lives in.
  const std::string& cross_source_ns(const Transition& t) const;

  Session start_session(std::uint64_t seed, std::shared_ptr<ErrorLog> log = nullptr) const;

 private:
  std::map<std::string, std::unique_ptr<Module>, std::less<>> modules_;
  QualifiedState start_;
  bool start_set_ = false;
  std::deque<Transition> cross_;
  std::vector<std::string> cross_ns_;
};

struct Exchange {
  OutcomeKind kind = OutcomeKind::Matched;
  std::string text;  // the system's reply, empty once the conversation ended
  std::vector<std::size_t> fired_rules;
  std::optional<Candidate> candidate;
  Decision decision = Decision::UseStateMachine;
  const Transition* user_transition = nullptr;
  const Transition* system_transition = nullptr;
  Bindings committed;
};

/// The opening system turn.
Exchange open_conversation(const CompositeFlow& system, Session& session);

/// One user input and the system's answer: update rules, the user
/// transition (native or cross-module), arbitration, then the system turn.
Exchange exchange(const CompositeFlow& system, Session& session, std::string_view input);

bool awaiting_user(const CompositeFlow& system, const Session& session);

/// A session bound to a loaded system.
class Conversation {
 public:
  Conversation(std::shared_ptr<const CompositeFlow> system, std::uint64_t seed,
               std::shared_ptr<ErrorLog> log = nullptr);

  Exchange open() { return open_conversation(*system_, session_); }
  Exchange reply(std::string_view input) { return exchange(*system_, session_, input); }
  bool awaiting_user() const { return natflow::awaiting_user(*system_, session_); }

  const Session& session() const noexcept { return session_; }
  const CompositeFlow& system() const noexcept { return *system_; }

 private:
  std::shared_ptr<const CompositeFlow> system_;
  Session session_;
};

}  // namespace natflow
