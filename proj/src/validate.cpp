#include "natflow/validate.hpp"

#include <algorithm>

#include "natflow/compile.hpp"
#include "natflow/document.hpp"

namespace natflow {

std::string describe(const Issue& issue) {
  std::string out(to_string(issue.severity));
  out += "[" + issue.code + "]";
  if (!issue.location.empty()) out += " " + issue.location;
  if (issue.span) out += " " + std::to_string(issue.span->begin) + ".." + std::to_string(issue.span->end);
  out += ": " + issue.message;
  return out;
}

std::size_t ValidationReport::errors() const {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(),
                                                [](const Issue& i) { return i.severity == Severity::Error; }));
}

std::size_t ValidationReport::warnings() const { return issues.size() - errors(); }

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) { return i.code == code; });
}

namespace {

enum class Position { Matcher, Generator };

Issue from_diagnostic(const Diagnostic& d) {
  return Issue{d.severity, std::string(to_string(d.code)), d.location, d.message, d.span};
}

Issue from_flow_error(const FlowError& e) {
  if (e.natex_diagnostic()) return from_diagnostic(*e.natex_diagnostic());
  return Issue{Severity::Error, std::string(to_string(e.kind())), e.path(), e.message(), std::nullopt};
}

std::string tag(const std::string& ns, const std::string& path) { return ns.empty() ? path : ns + ":" + path; }

bool function_and_variable_free(const NatexAst& ast) {
  bool free = true;
  walk(ast, [&](const NatexAst& n) {
    if (n.kind == NodeKind::FunctionCall || n.kind == NodeKind::VariableRef) free = false;
  });
  return free;
}

class Checker {
 public:
  explicit Checker(const CompositeFlow& system) : system_(system) {
    for (const Module* m : system.modules()) {
      std::set<std::string> names = m->flow.assigned_variables();
      for (const auto& r : m->rules) {
        collect_assignments(r.precondition, names);
        collect_assignments(r.postcondition, names);
      }
      for (const auto& n : names) {
        if (!m->ns.empty()) qualified_.insert(m->ns + "." + n);
      }
      assigned_[m->ns] = std::move(names);
    }
  }

  ValidationReport run() {
    for (const Module* m : system_.modules()) {
      // flow.diagnostics() lacks cross-module knowledge, so everything is re-checked here.
      for (const auto& t : m->flow.transitions()) {
        if (t.is_error) continue;
        check(*m, t.natex, tag(m->ns, t.path), t.speaker == Speaker::User ? Position::Matcher : Position::Generator);
      }
      for (const auto& r : m->rules) {
        check(*m, r.precondition, tag(m->ns, r.path), Position::Matcher);
        check(*m, r.postcondition, tag(m->ns, r.path), Position::Generator);
      }
    }
    for (const auto& t : system_.cross_transitions()) {
      check(system_.module_at(system_.cross_source_ns(t)), t.natex, t.path, Position::Matcher);
    }
    return std::move(report_);
  }

 private:
  void check(const Module& m, const NatexAst& ast, const std::string& location, Position position) {
    std::set<std::string> assignable = assigned_[m.ns];
    assignable.insert(qualified_.begin(), qualified_.end());
    for (Diagnostic& d : static_check(ast, m.flow.registry().names(), assignable)) {
      d.location = location;
      report_.issues.push_back(from_diagnostic(d));
    }
    probe(m, ast, location, position, false);
    if (position == Position::Matcher && function_and_variable_free(ast)) {
      try {
        report_.regexes.emplace_back(location, to_reference_regex(ast, VariableScope{}));
      } catch (const std::exception&) {
      }
    }
  }

  void probe(const Module& m, const NatexAst& node, const std::string& location, Position position,
             bool in_argument) {
    if (node.kind == NodeKind::FunctionCall) {
      for (const auto& child : node.children) probe(m, child, location, position, true);
      if (node.is_comparison() || FunctionRegistry::is_builtin(node.text)) return;
      const FunctionRegistry::Entry* entry = m.flow.registry().find(node.text);
      if (entry == nullptr) return;  // reported as UnknownFunction
      ResultKind kind = entry->declared;
      const bool literal_args = std::all_of(node.children.begin(), node.children.end(),
                                            [](const NatexAst& a) { return a.kind == NodeKind::Literal; });
      if (literal_args) {
        std::vector<std::string> args;
        for (const auto& a : node.children) args.push_back(a.text);
        const VariableTable empty;
        const VariableScope scope{&empty, m.ns};
        try {
          kind = entry->function(FunctionCall{node.text, std::move(args), node.children, scope, ""}).kind();
        } catch (const std::exception& e) {
          error(DiagCode::FunctionFailure, location, "function '#" + node.text + "' raised: " + e.what(), node.span);
          return;
        }
        if (kind != entry->declared) {
          error(DiagCode::TypeMismatch, location,
                "function '#" + node.text + "' declared " + std::string(to_string(entry->declared)) +
                    " but returned " + std::string(to_string(kind)),
                node.span);
          return;
        }
      }
      if (in_argument) return;
      if (position == Position::Matcher && kind == ResultKind::Text) {
        error(DiagCode::TypeMismatch, location, "function '#" + node.text + "' returns Text in matcher position",
              node.span);
      } else if (position == Position::Generator && kind == ResultKind::Bool) {
        error(DiagCode::TypeMismatch, location, "function '#" + node.text + "' returns Bool in generator position",
              node.span);
      }
      return;
    }
    for (const auto& child : node.children) probe(m, child, location, position, in_argument);
  }

  void error(DiagCode code, const std::string& location, std::string message, Span span) {
    report_.issues.push_back(Issue{Severity::Error, std::string(to_string(code)), location, std::move(message), span});
  }

  const CompositeFlow& system_;
  std::map<std::string, std::set<std::string>> assigned_;
  std::set<std::string> qualified_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_system(const CompositeFlow& system) { return Checker(system).run(); }

ValidationReport validate_file(const std::filesystem::path& path) {
  try {
    return validate_system(*load_system(path));
  } catch (const FlowError& e) {
    ValidationReport report;
    report.issues.push_back(from_flow_error(e));
    return report;
  } catch (const NatexError& e) {
    ValidationReport report;
    report.issues.push_back(from_diagnostic(e.diagnostic()));
    return report;
  }
}

int run_validate(const std::filesystem::path& path, bool emit_regex, std::ostream& out) {
  const ValidationReport report = validate_file(path);
  for (const Issue& issue : report.issues) out << describe(issue) << '\n';
  if (emit_regex) {
    for (const auto& [location, regex] : report.regexes) out << "regex " << location << '\t' << regex << '\n';
  }
  out << report.errors() << " error(s), " << report.warnings() << " warning(s)\n";
  return report.ok() ? 0 : 1;
}

}  // namespace natflow
