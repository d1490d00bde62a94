#include "natflow/compile.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include <boost/regex.hpp>

namespace natflow {

namespace {

constexpr std::string_view kGap = ".*?";
constexpr std::string_view kNever = "(?!)";

NatexError unbound(const NatexAst& ref) {
  return NatexError(make_error(DiagCode::UnboundVariable,
                               "reference to a non-existing variable '$" + ref.text + "'", ref.span));
}

NatexError mismatch(std::string message, const Span& span) {
  return NatexError(make_error(DiagCode::TypeMismatch, std::move(message), span));
}

// Shared by matching, generation and built-in invocation. Reads committed
// variables through the environment and uncommitted ones from `local`.
class Evaluator {
 public:
  Evaluator(const EvalEnv& env, std::string_view utterance, Bindings& local, Rng* rng)
      : env_(env), utterance_(utterance), local_(local), rng_(rng) {}

  std::string_view utterance() const { return utterance_; }
  const EvalEnv& env() const { return env_; }

  std::optional<std::string> lookup(std::string_view name) const {
    if (auto it = local_.find(std::string(name)); it != local_.end()) return it->second;
    return env_.variables.get(name);
  }

  std::string require(const NatexAst& ref) const {
    auto value = lookup(ref.text);
    if (!value) throw unbound(ref);
    return *value;
  }

  FunctionResult call(const NatexAst& node) {
    if (node.is_comparison()) {
      throw mismatch("comparison '" + node.text + "' is only valid inside #IF", node.span);
    }
    const std::string& name = node.text;
    if (name == "IF") {
      for (const auto& condition : node.children) {
        if (!holds(condition)) return FunctionResult::boolean(false);
      }
      return FunctionResult::boolean(true);
    }
    if (name == "ASSIGN") return assign(node);
    if (name == "ONT") return ontology(node);

    const FunctionRegistry::Entry* entry = env_.registry ? env_.registry->find(name) : nullptr;
    if (entry == nullptr) {
      throw NatexError(make_error(DiagCode::UnknownFunction,
                                  "call to a non-existing function '#" + name + "'", node.span));
    }
    std::vector<std::string> arguments;
    arguments.reserve(node.children.size());
    for (const auto& arg : node.children) arguments.push_back(argument_text(arg));
    const FunctionCall call{name, std::move(arguments), node.children, env_.variables, utterance_};
    FunctionResult result = FunctionResult::boolean(false);
    try {
      result = entry->function(call);
    } catch (const NatexError&) {
      throw;
    } catch (const std::exception& e) {
      throw NatexError(make_error(DiagCode::FunctionFailure,
                                  "function '#" + name + "' raised: " + e.what(), node.span));
    } catch (...) {
      throw NatexError(make_error(DiagCode::FunctionFailure,
                                  "function '#" + name + "' raised a non-standard exception", node.span));
    }
    if (result.kind() != entry->declared) {
      throw mismatch("function '#" + name + "' declared " + std::string(to_string(entry->declared)) +
                         " but returned " + std::string(to_string(result.kind())),
                     node.span);
    }
    return result;
  }

  // nullopt: generation blocked by a guard.
  std::optional<std::string> generate(const NatexAst& node) {
    switch (node.kind) {
      case NodeKind::Literal:
        return node.text;
      case NodeKind::VariableRef:
        return require(node);
      case NodeKind::FlexSequence:
      case NodeKind::RigidSequence: {
        std::string surface;
        for (const auto& child : node.children) {
          auto piece = generate(child);
          if (!piece) return std::nullopt;
          append_surface(surface, *piece);
        }
        return surface;
      }
      case NodeKind::Disjunction: {
        if (node.children.empty()) return std::nullopt;
        return generate(node.children[pick(node.children.size())]);
      }
      case NodeKind::Assignment: {
        auto value = generate(node.children.front());
        if (!value) return std::nullopt;
        store(node.text, *value);
        return value;
      }
      case NodeKind::FunctionCall: {
        if (node.text == "IF" || node.text == "ASSIGN") {
          return call(node).as_bool() ? std::optional<std::string>("") : std::nullopt;
        }
        const FunctionResult result = call(node);
        switch (result.kind()) {
          case ResultKind::Text:
            return result.as_text();
          case ResultKind::StringSet: {
            const auto& values = result.as_strings();
            if (values.empty()) return std::nullopt;
            return *std::next(values.begin(), static_cast<std::ptrdiff_t>(pick(values.size())));
          }
          case ResultKind::Bool:
            throw mismatch("function '#" + node.text + "' returned Bool in generator position", node.span);
        }
      }
    }
    return std::nullopt;
  }

 private:
  std::size_t pick(std::size_t n) {
    if (n <= 1) return 0;
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng());
  }

  Rng& rng() {
    if (rng_ == nullptr) {
      fallback_.emplace(0);
      rng_ = &*fallback_;
    }
    return *rng_;
  }

  void store(const std::string& name, std::string_view value) {
    std::string normalized = normalize(value);
    if (normalized.empty()) {
      local_.erase(name);
    } else {
      local_[name] = std::move(normalized);
    }
  }

  std::string argument_text(const NatexAst& arg) {
    switch (arg.kind) {
      case NodeKind::Literal:
        return arg.text;
      case NodeKind::VariableRef:
        return lookup(arg.text).value_or("");
      default:
        if (arg.is_comparison()) {
          throw mismatch("comparison '" + arg.text + "' is only valid inside #IF", arg.span);
        }
        return generate(arg).value_or("");
    }
  }

  // Comparison operand: nullopt stands for None.
  std::optional<std::string> operand(const NatexAst& node) {
    if (node.kind == NodeKind::VariableRef) return lookup(node.text);
    if (node.kind == NodeKind::Literal && node.text == kNoneLiteral) return std::nullopt;
    if (node.kind == NodeKind::Literal) return normalize(node.text);
    auto text = generate(node);
    if (!text) return std::nullopt;
    return normalize(*text);
  }

  bool holds(const NatexAst& condition) {
    if (condition.is_comparison()) {
      const bool equal = operand(condition.children[0]) == operand(condition.children[1]);
      return condition.text == "==" ? equal : !equal;
    }
    if (condition.kind == NodeKind::VariableRef) return lookup(condition.text).has_value();
    throw mismatch("#IF expects comparisons or variables, got " + std::string(to_string(condition.kind)),
                   condition.span);
  }

  FunctionResult assign(const NatexAst& node) {
    for (const auto& arg : node.children) {
      if (arg.kind != NodeKind::Assignment) {
        throw mismatch("#ASSIGN expects $VAR=value arguments", arg.span);
      }
      auto value = generate(arg.children.front());
      if (!value) return FunctionResult::boolean(false);
      store(arg.text, *value);
    }
    return FunctionResult::boolean(true);
  }

  FunctionResult ontology(const NatexAst& node) {
    if (node.children.size() != 1) {
      throw mismatch("#ONT takes exactly one node label", node.span);
    }
    const std::string label = argument_text(node.children.front());
    const Ontology* ontology = env_.registry ? env_.registry->ontology() : nullptr;
    if (ontology == nullptr) {
      if (env_.warnings) {
        env_.warnings->push_back(make_warning(DiagCode::FunctionFailure, "no ontology loaded for #ONT", node.span));
      }
      return FunctionResult::strings({});
    }
    return FunctionResult::strings(ont_query(*ontology, label, env_.warnings));
  }

  const EvalEnv& env_;
  std::string_view utterance_;
  Bindings& local_;
  Rng* rng_;
  std::optional<Rng> fallback_;
};

struct Piece {
  std::string pattern;
  bool zero_width = false;
};

std::string bounded(std::string_view phrase) {
  std::string out = "\\b(?:";
  out += escape_regex(phrase);
  out += ")\\b";
  return out;
}

// Translates an AST into a regex. In reference mode function calls are
// rejected; in dynamic mode they are evaluated against the utterance.
class Translator {
 public:
  Translator(Evaluator& eval, bool dynamic, CompileOptions options, CompiledMatcher* out)
      : eval_(eval), dynamic_(dynamic), options_(options), out_(out) {}

  std::string root(const NatexAst& ast) {
    if (ast.kind == NodeKind::RigidSequence) return rigid(ast.children, true).pattern;
    return node(ast).pattern;
  }

 private:
  Piece literal(std::string_view text) const {
    const std::string n = normalize(text);
    if (n.empty()) return {"", true};
    return {"\\b" + escape_regex(n) + "\\b", false};
  }

  Piece rigid(const std::vector<NatexAst>& children, bool anchored) {
    std::string zero;
    std::string body;
    bool consuming = false;
    for (const auto& child : children) {
      Piece p = node(child);
      if (p.zero_width) {
        zero += p.pattern;
        continue;
      }
      if (consuming) body += ' ';
      body += p.pattern;
      consuming = true;
    }
    if (!anchored) return {zero + body, !consuming};
    // A rigid sequence of guards only (e.g. a bare `#IF(...)`) accepts any input.
    if (!consuming) return {"^" + zero + ".*$", false};
    return {"^" + zero + body + "$", false};
  }

  Piece alternative(const NatexAst& alt) {
    if (alt.kind == NodeKind::Literal || alt.kind == NodeKind::VariableRef) {
      const std::string n = normalize(alt.kind == NodeKind::Literal ? alt.text : eval_.require(alt));
      if (n.empty()) return {"", true};
      return {bounded(n), false};
    }
    Piece p = node(alt);
    return {"(?:" + p.pattern + ")", p.zero_width};
  }

  Piece node(const NatexAst& n) {
    switch (n.kind) {
      case NodeKind::Literal:
        return literal(n.text);
      case NodeKind::VariableRef:
        return literal(eval_.require(n));
      case NodeKind::FlexSequence: {
        std::string out(kGap);
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i > 0) out += kGap;
          out += node(n.children[i]).pattern;
        }
        out += kGap;
        return {out, false};
      }
      case NodeKind::RigidSequence:
        return rigid(n.children, false);
      case NodeKind::Disjunction: {
        std::string out = "(?:";
        bool all_zero = true;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i > 0) out += '|';
          Piece p = alternative(n.children[i]);
          all_zero = all_zero && p.zero_width;
          out += p.pattern;
        }
        out += ')';
        return {out, all_zero};
      }
      case NodeKind::Assignment: {
        if (!groups_.insert(n.text).second) {
          throw NatexError(make_error(DiagCode::SyntaxError,
                                      "variable '$" + n.text + "' is captured more than once", n.span));
        }
        if (out_ != nullptr) out_->groups.push_back(n.text);
        Piece p = node(n.children.front());
        return {"(?<" + n.text + ">" + p.pattern + ")", p.zero_width};
      }
      case NodeKind::FunctionCall:
        return function(n);
    }
    return {"", true};
  }

  Piece function(const NatexAst& n) {
    if (!dynamic_) {
      throw std::invalid_argument("#" + n.text + " needs per-utterance compilation; use compile_matcher");
    }
    FunctionResult result = eval_.call(n);
    EvaluatedCall record{n.text, result, {}};
    Piece piece;
    switch (result.kind()) {
      case ResultKind::Bool:
        piece = {result.as_bool() ? "" : std::string(kNever), true};
        break;
      case ResultKind::Text:
        throw mismatch("function '#" + n.text + "' returned Text in matcher position", n.span);
      case ResultKind::StringSet: {
        std::set<std::string> normalized;
        for (const auto& element : result.as_strings()) {
          std::string e = normalize(element);
          if (e.empty()) continue;
          if (options_.filter_string_sets && !occurs_word_bounded(eval_.utterance(), e)) continue;
          normalized.insert(std::move(e));
        }
        std::vector<std::string> ordered(normalized.begin(), normalized.end());
        // Longest first, so a phrase wins over its own prefix.
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
        if (ordered.empty()) {
          piece = {std::string(kNever), false};
        } else {
          std::string out = "(?:";
          for (std::size_t i = 0; i < ordered.size(); ++i) {
            if (i > 0) out += '|';
            out += bounded(ordered[i]);
          }
          out += ')';
          piece = {std::move(out), false};
        }
        record.compiled_elements = std::move(ordered);
        break;
      }
    }
    if (out_ != nullptr) out_->calls.push_back(std::move(record));
    return piece;
  }

  Evaluator& eval_;
  bool dynamic_;
  CompileOptions options_;
  CompiledMatcher* out_;
  std::set<std::string> groups_;
};

// (surface, bindings) pairs for the production enumerator.
using Partial = std::vector<std::pair<std::string, Bindings>>;

class Enumerator {
 public:
  explicit Enumerator(const VariableScope& variables) : variables_(variables) {}

  Partial expand(const NatexAst& node, const Bindings& bound) const {
    switch (node.kind) {
      case NodeKind::Literal:
        return {{node.text, bound}};
      case NodeKind::VariableRef: {
        std::optional<std::string> value;
        if (auto it = bound.find(node.text); it != bound.end()) {
          value = it->second;
        } else {
          value = variables_.get(node.text);
        }
        if (!value) throw unbound(node);
        return {{*value, bound}};
      }
      case NodeKind::FlexSequence:
      case NodeKind::RigidSequence: {
        Partial acc{{"", bound}};
        for (const auto& child : node.children) {
          Partial next;
          for (const auto& [prefix, b] : acc) {
            for (auto& [piece, b2] : expand(child, b)) {
              std::string surface = prefix;
              append_surface(surface, piece);
              next.emplace_back(std::move(surface), std::move(b2));
            }
          }
          acc = std::move(next);
        }
        return acc;
      }
      case NodeKind::Disjunction: {
        Partial out;
        for (const auto& alt : node.children) {
          for (auto& item : expand(alt, bound)) out.push_back(std::move(item));
        }
        return out;
      }
      case NodeKind::Assignment: {
        Partial out = expand(node.children.front(), bound);
        for (auto& [surface, b] : out) {
          std::string n = normalize(surface);
          if (n.empty()) {
            b.erase(node.text);
          } else {
            b[node.text] = std::move(n);
          }
        }
        return out;
      }
      case NodeKind::FunctionCall:
        throw std::invalid_argument("productions are only defined for function-free expressions");
    }
    return {};
  }

 private:
  const VariableScope& variables_;
};

}  // namespace

std::string to_reference_regex(const NatexAst& ast, const VariableScope& variables) {
  const EvalEnv env{nullptr, variables, nullptr};
  Bindings local;
  Evaluator eval(env, "", local, nullptr);
  return Translator(eval, false, {}, nullptr).root(ast);
}

CompiledMatcher compile_matcher(const NatexAst& ast, const EvalEnv& env, std::string_view utterance,
                                CompileOptions options) {
  CompiledMatcher m;
  m.source = &ast;
  m.utterance = std::string(utterance);
  Evaluator eval(env, m.utterance, m.pending, nullptr);
  m.pattern = Translator(eval, true, options, &m).root(ast);
  return m;
}

MatchResult run_matcher(const CompiledMatcher& matcher) {
  boost::regex re;
  try {
    re.assign(matcher.pattern, boost::regex::perl);
  } catch (const boost::regex_error& e) {
    throw NatexError(make_error(DiagCode::SyntaxError, std::string("compiled pattern rejected: ") + e.what()));
  }
  boost::smatch m;
  bool ok = false;
  try {
    ok = boost::regex_match(matcher.utterance, m, re);
  } catch (const std::runtime_error& e) {
    throw NatexError(make_error(DiagCode::SyntaxError, std::string("pattern evaluation failed: ") + e.what()));
  }
  MatchResult result;
  if (!ok) return result;
  result.matched = true;
  result.bindings = matcher.pending;
  for (const auto& group : matcher.groups) {
    const auto& sub = m[group];
    if (!sub.matched) continue;
    std::string value = normalize(sub.str());
    if (!value.empty()) result.bindings[group] = std::move(value);
  }
  const auto begin = static_cast<std::size_t>(m.position(std::size_t{0}));
  result.consumed = {begin, begin + static_cast<std::size_t>(m.length(0))};
  return result;
}

MatchResult match(const NatexAst& ast, const EvalEnv& env, std::string_view raw, CompileOptions options) {
  const std::string utterance = normalize(raw);
  return run_matcher(compile_matcher(ast, env, utterance, options));
}

std::optional<GeneratedUtterance> generate(const NatexAst& ast, const EvalEnv& env, Rng& rng) {
  Bindings local;
  Evaluator eval(env, "", local, &rng);
  auto text = eval.generate(ast);
  if (!text) return std::nullopt;
  return GeneratedUtterance{std::move(*text), std::move(local)};
}

std::set<std::string> productions(const NatexAst& ast, const VariableScope& variables) {
  std::set<std::string> out;
  for (auto& [surface, bindings] : Enumerator(variables).expand(ast, {})) out.insert(std::move(surface));
  return out;
}

FunctionResult invoke(const EvalEnv& env, std::string_view name, std::span<const NatexAst> arguments,
                      std::string_view utterance, Bindings& pending, Rng* rng, Span call_span) {
  NatexAst node = NatexAst::call(std::string(name), std::vector<NatexAst>(arguments.begin(), arguments.end()));
  node.span = call_span;
  Evaluator eval(env, utterance, pending, rng);
  return eval.call(node);
}

}  // namespace natflow
