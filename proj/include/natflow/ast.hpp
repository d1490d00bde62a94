#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "natflow/diagnostic.hpp"

namespace natflow {

enum class NodeKind {
  Literal,
  FlexSequence,
  RigidSequence,
  Disjunction,
  Assignment,
  VariableRef,
  FunctionCall,
};

std::string_view to_string(NodeKind kind) noexcept;

/// Parse tree of one NATEX expression.
///
/// `text` holds the literal token (Literal), the variable name (VariableRef,
/// Assignment) or the function name (FunctionCall). Comparisons inside
/// function arguments are FunctionCall nodes whose name is `==` or `!=` and
/// which have exactly two children.
struct NatexAst {
  NodeKind kind = NodeKind::Literal;
  std::string text;
  std::vector<NatexAst> children;
  Span span;

  bool is_comparison() const noexcept {
    return kind == NodeKind::FunctionCall && (text == "==" || text == "!=");
  }

  static NatexAst literal(std::string text);
  static NatexAst flex(std::vector<NatexAst> children);
  static NatexAst rigid(std::vector<NatexAst> children);
  static NatexAst disjunction(std::vector<NatexAst> alternatives);
  static NatexAst assignment(std::string variable, NatexAst value);
  static NatexAst variable(std::string name);
  static NatexAst call(std::string function, std::vector<NatexAst> arguments = {});
  static NatexAst comparison(std::string op, NatexAst lhs, NatexAst rhs);
};

inline constexpr int kMaxNestingDepth = 64;
inline constexpr std::string_view kNoneLiteral = "None";

/// Structural equality; spans are ignored.
bool structurally_equal(const NatexAst& a, const NatexAst& b);

/// Parses NATEX source. Throws NatexError(SyntaxError) with a span inside
/// `source` on malformed input.
NatexAst parse(std::string_view source);

/// Renders an AST back to NATEX source; parse(format(ast)) is structurally
/// equal to any AST produced by parse.
std::string format(const NatexAst& ast);

/// Debug rendering such as `FlexSequence[Literal(I), Disjunction[...]]`.
std::string to_debug_string(const NatexAst& ast);

/// Pre-runtime checks: unknown functions (error) and references to variables
/// that nothing assigns (warning). Sorted by span.
std::vector<Diagnostic> static_check(const NatexAst& ast,
                                     const std::set<std::string>& known_functions,
                                     const std::set<std::string>& assignable_variables);

/// Adds every variable the expression can assign (`$V=...`, including inside
/// `#ASSIGN`) to `out`.
void collect_assignments(const NatexAst& ast, std::set<std::string>& out);

/// Calls `visit` for every node in pre-order.
template <typename Visitor>
void walk(const NatexAst& ast, Visitor&& visit) {
  visit(ast);
  for (const auto& child : ast.children) walk(child, visit);
}

}  // namespace natflow
