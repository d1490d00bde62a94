#pragma once

#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "natflow/ast.hpp"
#include "natflow/knowledge.hpp"
#include "natflow/text.hpp"
#include "natflow/variables.hpp"

namespace natflow {

using Rng = std::mt19937_64;

/// Everything NATEX evaluation may read. Nothing here is written: matches
/// and generations report bindings for the caller to commit.
struct EvalEnv {
  const FunctionRegistry* registry = nullptr;
  VariableScope variables;
  // Receives soft failures such as unknown ontology nodes.
  std::vector<Diagnostic>* warnings = nullptr;
};

/// Static translation of a function-free AST, with variable references
/// replaced by their current values. Throws NatexError(UnboundVariable) for
/// unset variables and std::invalid_argument if a function call is present.
std::string to_reference_regex(const NatexAst& ast, const VariableScope& variables);

struct EvaluatedCall {
  std::string name;
  FunctionResult result;
  // Set elements that made it into the pattern, in alternation order.
  std::vector<std::string> compiled_elements;
};

/// A pattern compiled against one specific utterance.
struct CompiledMatcher {
  std::string pattern;
  const NatexAst* source = nullptr;  // not owned
  std::vector<EvaluatedCall> calls;
  std::string utterance;
  std::vector<std::string> groups;
  Bindings pending;  // writes made by #ASSIGN while compiling
};

struct CompileOptions {
  // Drop StringSet elements absent from the utterance. Turning this off
  // gives the unfiltered translation, used as a reference in tests.
  bool filter_string_sets = true;
};

/// Compiles `ast` for `utterance` (already normalized), invoking each
/// function in matcher position once.
CompiledMatcher compile_matcher(const NatexAst& ast, const EvalEnv& env, std::string_view utterance,
                                CompileOptions options = {});

struct MatchResult {
  bool matched = false;
  Bindings bindings;
  Span consumed;
};

MatchResult run_matcher(const CompiledMatcher& matcher);

/// Normalizes `raw`, compiles and runs. Bindings are returned, never written.
MatchResult match(const NatexAst& ast, const EvalEnv& env, std::string_view raw,
                  CompileOptions options = {});

struct GeneratedUtterance {
  std::string text;
  Bindings assignments;
};

/// Random production of `ast`. Returns nullopt when a guard blocks the
/// generation (`#IF` false, an empty phrase set).
std::optional<GeneratedUtterance> generate(const NatexAst& ast, const EvalEnv& env, Rng& rng);

/// Every string `generate` can produce for a function-free AST.
std::set<std::string> productions(const NatexAst& ast, const VariableScope& variables);

/// Calls `name` with unevaluated `arguments`. Built-ins are handled here;
/// `#ASSIGN` writes into `pending` only. `rng` drives generation inside
/// `#ASSIGN` values and may be null (a fixed-seed engine is used then).
FunctionResult invoke(const EvalEnv& env, std::string_view name, std::span<const NatexAst> arguments,
                      std::string_view utterance, Bindings& pending, Rng* rng = nullptr, Span call_span = {});

}  // namespace natflow
