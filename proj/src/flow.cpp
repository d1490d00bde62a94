#include "natflow/flow.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace natflow {

using json = nlohmann::ordered_json;

std::string_view to_string(Speaker speaker) noexcept {
  return speaker == Speaker::User ? "user" : "system";
}

std::string_view to_string(OutcomeKind kind) noexcept {
  switch (kind) {
    case OutcomeKind::Matched: return "Matched";
    case OutcomeKind::ErrorTransition: return "ErrorTransition";
    case OutcomeKind::RuleResponse: return "RuleResponse";
  }
  return "Unknown";
}

const State* DialogueFlow::find_state(std::string_view id) const {
  auto it = states_.find(id);
  return it == states_.end() ? nullptr : &it->second;
}

std::vector<const Transition*> DialogueFlow::outgoing(std::string_view state) const {
  std::vector<const Transition*> out;
  if (const State* s = find_state(state)) {
    for (const std::size_t i : s->outgoing) out.push_back(&transitions_[i]);
  }
  return out;
}

const Transition* DialogueFlow::error_transition(std::string_view state) const {
  const State* s = find_state(state);
  if (s == nullptr || !s->error_transition) return nullptr;
  return &transitions_[*s->error_transition];
}

double DialogueFlow::max_system_priority(std::string_view state) const {
  double best = -std::numeric_limits<double>::infinity();
  const State* s = find_state(state);
  if (s == nullptr || s->speaker != Speaker::System) return best;
  for (const std::size_t i : s->outgoing) best = std::max(best, transitions_[i].priority);
  return best;
}

std::set<std::string> DialogueFlow::assigned_variables() const {
  std::set<std::string> out;
  for (const auto& t : transitions_) {
    if (!t.is_error) collect_assignments(t.natex, out);
  }
  return out;
}

bool is_reserved_root_key(std::string_view key) noexcept {
  return key == "state" || key == "rules" || key == "functions" || key == "ontology";
}

// ---------------------------------------------------------------------------
// Loader

namespace {

std::string child_path(const std::string& parent, std::string_view key) {
  std::string out = parent + "/";
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

class FlowBuilder {
 public:
  explicit FlowBuilder(std::shared_ptr<const FunctionRegistry> registry) {
    flow_.registry_ = registry ? std::move(registry) : std::make_shared<FunctionRegistry>();
  }

  DialogueFlow build(const json& root, const std::set<std::string>& extra_assignable) {
    if (!root.is_object()) throw FlowError(FlowError::Kind::Schema, "", "flow document must be a JSON object");
    if (root.contains("score")) throw FlowError(FlowError::Kind::Schema, "/score", "the initial state has no incoming transition to score");
    std::string initial(DialogueFlow::kDefaultInitial);
    if (root.contains("state")) initial = state_name(root["state"], "/state");
    declare(initial, Speaker::System, "/state");
    flow_.initial_ = initial;
    system_level(root, initial, "", true);
    if (flow_.transitions_.empty()) throw FlowError(FlowError::Kind::Schema, "", "flow defines no transitions");
    resolve_gotos();
    run_static_checks(extra_assignable);
    return std::move(flow_);
  }

 private:
  struct Goto {
    std::size_t transition;
    Speaker expected;
  };

  static std::string state_name(const json& value, const std::string& path) {
    if (!value.is_string() || value.get<std::string>().empty()) {
      throw FlowError(FlowError::Kind::Schema, path, "\"state\" must be a non-empty string");
    }
    std::string name = value.get<std::string>();
    if (name.find('.') != std::string::npos) {
      throw FlowError(FlowError::Kind::Schema, path, "state names may not contain '.'");
    }
    return name;
  }

  void declare(const std::string& id, Speaker speaker, const std::string& path) {
    if (id == DialogueFlow::kTerminal) {
      throw FlowError(FlowError::Kind::Schema, path, "'end' is the reserved terminal state");
    }
    if (!flow_.states_.emplace(id, State{id, speaker, {}, std::nullopt}).second) {
      throw FlowError(FlowError::Kind::Schema, path, "state '" + id + "' declared more than once");
    }
  }

  // State reached through an object-valued transition.
  std::string target_for(const json& object, Speaker speaker, const std::string& path) {
    std::string id;
    if (object.contains("state")) {
      id = state_name(object["state"], child_path(path, "state"));
    } else {
      do {
        id = "_" + std::to_string(++auto_ids_);
      } while (flow_.states_.contains(id));
    }
    declare(id, speaker, path);
    return id;
  }

  static double score(const json& object, const std::string& path) {
    if (!object.contains("score")) return DialogueFlow::kDefaultPriority;
    const json& s = object["score"];
    if (!s.is_number()) throw FlowError(FlowError::Kind::Schema, child_path(path, "score"), "\"score\" must be a number");
    return s.get<double>();
  }

  std::size_t add_transition(Transition t) {
    t.index = flow_.transitions_.size();
    flow_.transitions_.push_back(std::move(t));
    return flow_.transitions_.back().index;
  }

  static NatexAst parse_key(const std::string& key, const std::string& path) {
    try {
      return parse(key);
    } catch (const NatexError& e) {
      throw FlowError(path, e);
    }
  }

  // `object` lists the outgoing transitions of system state `id`.
  void system_level(const json& object, const std::string& id, const std::string& path, bool root) {
    for (const auto& [key, value] : object.items()) {
      if (key == "state" || key == "score") continue;
      if (root && is_reserved_root_key(key)) continue;
      const std::string p = child_path(path, key);
      Transition t;
      t.source = id;
      t.speaker = Speaker::System;
      t.natex = parse_key(key, p);
      t.natex_source = key;
      t.path = p;
      const std::size_t index = add_transition(std::move(t));
      flow_.states_.at(id).outgoing.push_back(index);
      link(index, value, Speaker::User, p);
    }
  }

  // `object` lists the outgoing transitions of user state `id`.
  void user_level(const json& object, const std::string& id, const std::string& path) {
    for (const auto& [key, value] : object.items()) {
      if (key == "state" || key == "score") continue;
      const std::string p = child_path(path, key);
      Transition t;
      t.source = id;
      t.speaker = Speaker::User;
      t.path = p;
      if (key == "error") {
        if (value.is_object() && value.contains("score")) {
          throw FlowError(FlowError::Kind::Schema, child_path(p, "score"), "error transitions cannot be scored");
        }
        t.is_error = true;
        t.priority = DialogueFlow::kErrorPriority;
        const std::size_t index = add_transition(std::move(t));
        flow_.states_.at(id).error_transition = index;
        link(index, value, Speaker::System, p);
        continue;
      }
      t.natex = parse_key(key, p);
      t.natex_source = key;
      const std::size_t index = add_transition(std::move(t));
      flow_.states_.at(id).outgoing.push_back(index);
      link(index, value, Speaker::System, p);
    }
  }

  // Resolves a transition's value: a goto string or a nested turn object.
  void link(std::size_t index, const json& value, Speaker target_speaker, const std::string& path) {
    if (value.is_string()) {
      flow_.transitions_[index].target = value.get<std::string>();
      gotos_.push_back({index, target_speaker});
      return;
    }
    if (!value.is_object()) {
      throw FlowError(FlowError::Kind::Schema, path, "transition value must be an object or a state name");
    }
    const std::string target = target_for(value, target_speaker, path);
    Transition& t = flow_.transitions_[index];
    t.target = target;
    if (!t.is_error) t.priority = score(value, path);
    if (target_speaker == Speaker::User) {
      user_level(value, target, path);
    } else {
      system_level(value, target, path, false);
    }
  }

  void resolve_gotos() {
    for (const auto& g : gotos_) {
      const Transition& t = flow_.transitions_[g.transition];
      if (t.target == DialogueFlow::kTerminal) continue;
      const State* s = flow_.find_state(t.target);
      if (s == nullptr) {
        throw FlowError(FlowError::Kind::DanglingGoto, t.path, "no state named '" + t.target + "'");
      }
      if (s->speaker != g.expected) {
        throw FlowError(FlowError::Kind::SpeakerMismatch, t.path,
                        "'" + t.target + "' is a " + std::string(to_string(s->speaker)) + " state but a " +
                            std::string(to_string(g.expected)) + " state must follow this turn");
      }
    }
  }

  void run_static_checks(const std::set<std::string>& extra_assignable) {
    std::set<std::string> assignable = flow_.assigned_variables();
    assignable.insert(extra_assignable.begin(), extra_assignable.end());
    const std::set<std::string> known = flow_.registry_->names();
    for (const auto& t : flow_.transitions_) {
      if (t.is_error) continue;
      for (auto& d : static_check(t.natex, known, assignable)) {
        d.location = t.path;
        flow_.diagnostics_.push_back(std::move(d));
      }
    }
  }

  DialogueFlow flow_;
  std::vector<Goto> gotos_;
  int auto_ids_ = 0;
};

DialogueFlow load_flow(std::string_view document, std::shared_ptr<const FunctionRegistry> registry,
                       const std::set<std::string>& extra_assignable) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw FlowError(FlowError::Kind::Schema, "", std::string("flow is not valid JSON: ") + e.what());
  }
  return FlowBuilder(std::move(registry)).build(root, extra_assignable);
}

// ---------------------------------------------------------------------------
// Error log

std::string to_json_line(const ErrorRecord& record) {
  json line;
  line["turn"] = record.turn;
  line["state"] = record.state;
  line["input"] = record.input;
  return line.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string ErrorLog::append(const ErrorRecord& record, std::vector<Diagnostic>* warnings) {
  std::string line = to_json_line(record);
  std::lock_guard lock(mutex_);
  records_.push_back(record);
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    if (out) out << line << '\n';
    if (!out && warnings != nullptr) {
      warnings->push_back(make_warning(DiagCode::FunctionFailure, "could not append to error log " + file_->string()));
    }
  }
  return line;
}

std::vector<ErrorRecord> ErrorLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::string log_error(Session& session, std::string_view state, std::string_view input, std::int64_t turn) {
  if (!session.error_log) session.error_log = std::make_shared<ErrorLog>();
  return session.error_log->append(ErrorRecord{turn, std::string(state), std::string(input)}, &session.warnings);
}

// ---------------------------------------------------------------------------
// Turns

Session start_session(const DialogueFlow& flow, std::uint64_t seed, std::shared_ptr<ErrorLog> log) {
  Session session(seed);
  session.state = flow.initial_state();
  session.error_log = log ? std::move(log) : std::make_shared<ErrorLog>();
  return session;
}

namespace {

std::size_t draw(Rng& rng, std::size_t n) {
  if (n <= 1) return 0;
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

std::string recency_key(const Session& session, const Transition& t) {
  return session.ns + "#" + std::to_string(t.index);
}

void require_speaker(const DialogueFlow& flow, const Session& session, Speaker speaker) {
  if (session.ended) {
    throw FlowError(FlowError::Kind::OutOfTurn, session.qualified_state(), "the conversation has ended");
  }
  const State* s = flow.find_state(session.state);
  if (s == nullptr) throw FlowError(FlowError::Kind::UnknownState, session.qualified_state(), "session is in an unknown state");
  if (s->speaker != speaker) {
    throw FlowError(FlowError::Kind::OutOfTurn, session.qualified_state(),
                    "expected a " + std::string(to_string(s->speaker)) + " turn");
  }
}

// A user state with nothing leaving it ends the conversation.
bool is_terminal(const DialogueFlow& flow, std::string_view state) {
  if (state == DialogueFlow::kTerminal) return true;
  const State* s = flow.find_state(state);
  return s != nullptr && s->speaker == Speaker::User && s->outgoing.empty() && !s->error_transition;
}

void enter(Session& session, const Transition& t) {
  if (t.target_namespace) session.ns = *t.target_namespace;
  session.state = t.target;
}

}  // namespace

bool awaiting_user(const DialogueFlow& flow, const Session& session) {
  if (session.ended) return false;
  const State* s = flow.find_state(session.state);
  return s != nullptr && s->speaker == Speaker::User;
}

UserTurnPlan plan_user_turn(const DialogueFlow& flow, Session& session, std::string_view input,
                            std::span<const Transition* const> extra) {
  require_speaker(flow, session, Speaker::User);
  std::vector<const Transition*> candidates = flow.outgoing(session.state);
  candidates.insert(candidates.end(), extra.begin(), extra.end());

  const EvalEnv env{&flow.registry(), session.scope(), &session.warnings};
  const std::string utterance = normalize(input);
  std::vector<std::pair<const Transition*, Bindings>> matches;
  for (const Transition* t : candidates) {
    try {
      MatchResult r = run_matcher(compile_matcher(t->natex, env, utterance));
      if (r.matched) matches.emplace_back(t, std::move(r.bindings));
    } catch (const NatexError& e) {
      session.warnings.push_back(e.located(t->path).diagnostic());
    }
  }

  UserTurnPlan plan;
  if (matches.empty()) {
    plan.transition = flow.error_transition(session.state);
    if (plan.transition == nullptr) {
      throw FlowError(FlowError::Kind::NoErrorTransition, session.qualified_state(),
                      "no transition matched and the state has no error transition");
    }
    plan.is_error = true;
    return plan;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [t, b] : matches) best = std::max(best, t->priority);
  std::vector<std::size_t> top;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (matches[i].first->priority == best) top.push_back(i);
  }
  auto& chosen = matches[top[draw(session.rng, top.size())]];
  plan.transition = chosen.first;
  plan.bindings = std::move(chosen.second);
  return plan;
}

TurnOutcome commit_user_turn(Session& session, const UserTurnPlan& plan, std::string_view input) {
  ++session.turn;
  TurnOutcome outcome;
  outcome.transition = plan.transition;
  if (plan.is_error) {
    outcome.kind = OutcomeKind::ErrorTransition;
    outcome.input = std::string(input);
    log_error(session, session.qualified_state(), input, session.turn);
  } else {
    outcome.kind = OutcomeKind::Matched;
    outcome.committed = plan.bindings;
    commit(session.variables, session.ns, plan.bindings);
  }
  enter(session, *plan.transition);
  if (session.state == DialogueFlow::kTerminal) session.ended = true;
  return outcome;
}

TurnOutcome user_turn(const DialogueFlow& flow, Session& session, std::string_view input,
                      std::span<const Transition* const> extra) {
  const UserTurnPlan plan = plan_user_turn(flow, session, input, extra);
  return commit_user_turn(session, plan, input);
}

TurnOutcome system_turn(const DialogueFlow& flow, Session& session) {
  require_speaker(flow, session, Speaker::System);
  std::vector<const Transition*> remaining = flow.outgoing(session.state);
  if (remaining.empty()) {
    throw FlowError(FlowError::Kind::DeadEnd, session.qualified_state(), "no outgoing system transitions");
  }
  const EvalEnv env{&flow.registry(), session.scope(), &session.warnings};
  std::optional<NatexError> last_error;
  while (!remaining.empty()) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Transition* t : remaining) best = std::max(best, t->priority);
    std::int64_t oldest = std::numeric_limits<std::int64_t>::max();
    for (const Transition* t : remaining) {
      if (t->priority != best) continue;
      auto it = session.last_taken.find(recency_key(session, *t));
      oldest = std::min(oldest, it == session.last_taken.end() ? std::int64_t{-1} : it->second);
    }
    std::vector<const Transition*> eligible;
    for (const Transition* t : remaining) {
      if (t->priority != best) continue;
      auto it = session.last_taken.find(recency_key(session, *t));
      const std::int64_t taken = it == session.last_taken.end() ? -1 : it->second;
      if (taken == oldest) eligible.push_back(t);
    }
    const Transition* chosen = eligible[draw(session.rng, eligible.size())];
    std::optional<GeneratedUtterance> generated;
    try {
      generated = generate(chosen->natex, env, session.rng);
    } catch (const NatexError& e) {
      session.warnings.push_back(e.located(chosen->path).diagnostic());
      last_error = e.located(chosen->path);
    }
    if (!generated) {
      remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
      continue;
    }
    commit(session.variables, session.ns, generated->assignments);
    session.last_taken[recency_key(session, *chosen)] = session.turn;
    TurnOutcome outcome;
    outcome.kind = OutcomeKind::Matched;
    outcome.transition = chosen;
    outcome.committed = std::move(generated->assignments);
    outcome.text = std::move(generated->text);
    enter(session, *chosen);
    if (is_terminal(flow, session.state)) session.ended = true;
    return outcome;
  }
  if (last_error) throw *last_error;
  throw FlowError(FlowError::Kind::DeadEnd, session.qualified_state(), "every system response was blocked");
}

}  // namespace natflow
