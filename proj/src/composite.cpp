#include "natflow/composite.hpp"

#include <algorithm>

namespace natflow {

CompositeFlow CompositeFlow::single(DialogueFlow flow, std::vector<UpdateRule> rules, std::string source) {
  CompositeFlow out;
  out.start_ = {"", flow.initial_state()};
  out.start_set_ = true;
  auto m = std::make_unique<Module>(Module{"", std::move(flow), std::move(rules), std::move(source)});
  out.modules_.emplace("", std::move(m));
  return out;
}

void CompositeFlow::add_module(std::string ns, DialogueFlow flow, std::vector<UpdateRule> rules, std::string source) {
  if (ns.empty() || ns.find('.') != std::string::npos) {
    throw FlowError(FlowError::Kind::Schema, "/modules", "namespace '" + ns + "' must be non-empty and undotted");
  }
  if (modules_.contains(ns)) {
    throw FlowError(FlowError::Kind::DuplicateNamespace, "/modules/" + ns, "namespace '" + ns + "' is already in use");
  }
  if (modules_.contains("")) {
    throw FlowError(FlowError::Kind::Schema, "/modules", "a single-flow system cannot take further modules");
  }
  const std::string initial = flow.initial_state();
  auto m = std::make_unique<Module>(Module{ns, std::move(flow), std::move(rules), std::move(source)});
  modules_.emplace(ns, std::move(m));
  if (!start_set_) start_ = {ns, initial};
}

QualifiedState CompositeFlow::resolve(std::string_view qualified, const std::string& path) const {
  QualifiedState q;
  if (const auto dot = qualified.find('.'); dot != std::string_view::npos) {
    q.ns = std::string(qualified.substr(0, dot));
    q.state = std::string(qualified.substr(dot + 1));
  } else {
    q.state = std::string(qualified);
  }
  const Module* m = module(q.ns);
  if (m == nullptr || m->flow.find_state(q.state) == nullptr) {
    throw FlowError(FlowError::Kind::UnknownState, path, "'" + std::string(qualified) + "' does not resolve");
  }
  return q;
}

void CompositeFlow::set_start(std::string_view qualified, const std::string& path) {
  QualifiedState q = resolve(qualified, path);
  if (module_at(q.ns).flow.find_state(q.state)->speaker != Speaker::System) {
    throw FlowError(FlowError::Kind::SpeakerMismatch, path, "the start state '" + q.str() + "' must be a system state");
  }
  start_ = std::move(q);
  start_set_ = true;
}

const Transition& CompositeFlow::add_cross_transition(std::string_view from, std::string_view to,
                                                      std::string_view natex, double priority,
                                                      const std::string& path) {
  const QualifiedState source = resolve(from, path);
  const QualifiedState target = resolve(to, path);
  if (module_at(source.ns).flow.find_state(source.state)->speaker != Speaker::User) {
    throw FlowError(FlowError::Kind::SpeakerMismatch, path, "'" + source.str() + "' is not a user state");
  }
  if (module_at(target.ns).flow.find_state(target.state)->speaker != Speaker::System) {
    throw FlowError(FlowError::Kind::SpeakerMismatch, path, "'" + target.str() + "' is not a system state");
  }
  Transition t;
  t.index = cross_.size();
  t.source = source.state;
  t.target = target.state;
  t.target_namespace = target.ns;
  t.speaker = Speaker::User;
  try {
    t.natex = parse(natex);
  } catch (const NatexError& e) {
    throw FlowError(path, e);
  }
  t.natex_source = std::string(natex);
  t.priority = priority;
  t.path = path;
  cross_.push_back(std::move(t));
  cross_ns_.push_back(source.ns);
  return cross_.back();
}

const Module* CompositeFlow::module(std::string_view ns) const {
  auto it = modules_.find(ns);
  return it == modules_.end() ? nullptr : it->second.get();
}

const Module& CompositeFlow::module_at(std::string_view ns) const {
  const Module* m = module(ns);
  if (m == nullptr) throw FlowError(FlowError::Kind::UnknownState, std::string(ns), "no module '" + std::string(ns) + "'");
  return *m;
}

std::vector<const Module*> CompositeFlow::modules() const {
  std::vector<const Module*> out;
  for (const auto& [ns, m] : modules_) out.push_back(m.get());
  return out;
}

std::vector<const Transition*> CompositeFlow::cross_from(std::string_view ns, std::string_view state) const {
  std::vector<const Transition*> out;
  for (std::size_t i = 0; i < cross_.size(); ++i) {
    if (cross_ns_[i] == ns && cross_[i].source == state) out.push_back(&cross_[i]);
  }
  return out;
}

const std::string& CompositeFlow::cross_source_ns(const Transition& t) const { return cross_ns_.at(t.index); }

Session CompositeFlow::start_session(std::uint64_t seed, std::shared_ptr<ErrorLog> log) const {
  if (modules_.empty()) throw FlowError(FlowError::Kind::Schema, "", "the system has no modules");
  Session session(seed);
  session.ns = start_.ns;
  session.state = start_.state;
  session.error_log = log ? std::move(log) : std::make_shared<ErrorLog>();
  return session;
}

bool awaiting_user(const CompositeFlow& system, const Session& session) {
  const Module* m = system.module(session.ns);
  return m != nullptr && awaiting_user(m->flow, session);
}

Exchange open_conversation(const CompositeFlow& system, Session& session) {
  const Module& m = system.module_at(session.ns);
  Exchange out;
  TurnOutcome t = system_turn(m.flow, session);
  out.system_transition = t.transition;
  out.text = std::move(t.text);
  out.committed = std::move(t.committed);
  return out;
}

Exchange exchange(const CompositeFlow& system, Session& session, std::string_view input) {
  const Module& here = system.module_at(session.ns);
  if (!awaiting_user(here.flow, session)) {
    throw FlowError(FlowError::Kind::OutOfTurn, session.qualified_state(),
                    session.ended ? "the conversation has ended" : "a system turn is pending");
  }
  Exchange out;
  RulePassResult pass = evaluate(here.rules, here.flow.registry(), input, session);
  out.fired_rules = pass.fired;
  out.candidate = pass.candidate;
  out.committed = pass.committed;

  const std::vector<const Transition*> extra = system.cross_from(session.ns, session.state);
  std::optional<UserTurnPlan> plan;
  try {
    plan = plan_user_turn(here.flow, session, input, extra);
  } catch (const FlowError& e) {
    if (e.kind() != FlowError::Kind::NoErrorTransition || !pass.candidate) throw;
  }

  double system_max = -std::numeric_limits<double>::infinity();
  if (plan) {
    const Transition& t = *plan->transition;
    const Module& next = system.module_at(t.target_namespace.value_or(session.ns));
    system_max = next.flow.max_system_priority(t.target);
  }
  out.decision = arbitrate(pass.candidate, system_max);
  if (out.decision == Decision::UseCandidate) {
    ++session.turn;
    out.kind = OutcomeKind::RuleResponse;
    out.text = pass.candidate->text;
    return out;
  }

  TurnOutcome user = commit_user_turn(session, *plan, input);
  out.kind = user.kind;
  out.user_transition = user.transition;
  for (const auto& [k, v] : user.committed) out.committed[k] = v;
  if (session.ended) return out;

  const Module& next = system.module_at(session.ns);
  TurnOutcome reply = system_turn(next.flow, session);
  out.system_transition = reply.transition;
  out.text = std::move(reply.text);
  return out;
}

Conversation::Conversation(std::shared_ptr<const CompositeFlow> system, std::uint64_t seed,
                           std::shared_ptr<ErrorLog> log)
    : system_(std::move(system)), session_(system_->start_session(seed, std::move(log))) {}

}  // namespace natflow
