#include "natflow/ast.hpp"

#include "natflow/text.hpp"

#include <algorithm>
#include <utility>

namespace natflow {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Literal: return "Literal";
    case NodeKind::FlexSequence: return "FlexSequence";
    case NodeKind::RigidSequence: return "RigidSequence";
    case NodeKind::Disjunction: return "Disjunction";
    case NodeKind::Assignment: return "Assignment";
    case NodeKind::VariableRef: return "VariableRef";
    case NodeKind::FunctionCall: return "FunctionCall";
  }
  return "Unknown";
}

NatexAst NatexAst::literal(std::string text) {
  return NatexAst{NodeKind::Literal, std::move(text), {}, {}};
}
NatexAst NatexAst::flex(std::vector<NatexAst> children) {
  return NatexAst{NodeKind::FlexSequence, {}, std::move(children), {}};
}
NatexAst NatexAst::rigid(std::vector<NatexAst> children) {
  return NatexAst{NodeKind::RigidSequence, {}, std::move(children), {}};
}
NatexAst NatexAst::disjunction(std::vector<NatexAst> alternatives) {
  return NatexAst{NodeKind::Disjunction, {}, std::move(alternatives), {}};
}
NatexAst NatexAst::assignment(std::string variable, NatexAst value) {
  NatexAst node{NodeKind::Assignment, std::move(variable), {}, {}};
  node.children.push_back(std::move(value));
  return node;
}
NatexAst NatexAst::variable(std::string name) {
  return NatexAst{NodeKind::VariableRef, std::move(name), {}, {}};
}
NatexAst NatexAst::call(std::string function, std::vector<NatexAst> arguments) {
  return NatexAst{NodeKind::FunctionCall, std::move(function), std::move(arguments), {}};
}
NatexAst NatexAst::comparison(std::string op, NatexAst lhs, NatexAst rhs) {
  NatexAst node{NodeKind::FunctionCall, std::move(op), {}, {}};
  node.children.push_back(std::move(lhs));
  node.children.push_back(std::move(rhs));
  return node;
}

bool structurally_equal(const NatexAst& a, const NatexAst& b) {
  if (a.kind != b.kind || a.text != b.text || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// Returns the offset of the first invalid byte, or npos.
std::size_t find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if (c >= 0xC2 && c <= 0xDF) {
      extra = 1;
    } else if (c >= 0xE0 && c <= 0xEF) {
      extra = 2;
    } else if (c >= 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return i;
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) return i;
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
    }
    if (extra == 2) {
      const auto c1 = static_cast<unsigned char>(s[i + 1]);
      if ((c == 0xE0 && c1 < 0xA0) || (c == 0xED && c1 > 0x9F)) return i;
    } else if (extra == 3) {
      const auto c1 = static_cast<unsigned char>(s[i + 1]);
      if ((c == 0xF0 && c1 < 0x90) || (c == 0xF4 && c1 > 0x8F)) return i;
    }
    i += extra + 1;
  }
  return std::string_view::npos;
}

// Parsing context; decides which characters terminate a word and whether
// adjacent words merge into one multi-word literal.
enum class Ctx { Root, Flex, Alternative, Argument };

bool merges_words(Ctx ctx) { return ctx != Ctx::Flex; }

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NatexAst parse_root() {
    if (const auto bad = find_invalid_utf8(src_); bad != std::string_view::npos) {
      fail("invalid UTF-8 byte", {bad, bad + 1});
    }
    auto terms = parse_sequence(Ctx::Root);
    if (terms.empty()) fail("empty expression", {0, src_.size()});
    if (terms.size() == 1 && terms.front().kind == NodeKind::FlexSequence) {
      return std::move(terms.front());
    }
    NatexAst root = NatexAst::rigid(std::move(terms));
    root.span = {0, src_.size()};
    return root;
  }

 private:
  [[noreturn]] void fail(std::string message, Span span) const {
    span.end = std::min(std::max(span.end, span.begin), src_.size());
    span.begin = std::min(span.begin, span.end);
    throw NatexError(make_error(DiagCode::SyntaxError, std::move(message), span));
  }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  bool at_operator() const {
    return (peek() == '=' || peek() == '!') && peek(1) == '=';
  }

  void skip_separators(Ctx ctx) {
    while (!at_end() && (is_space(peek()) || (ctx == Ctx::Flex && peek() == ','))) ++pos_;
  }

  bool at_terminator(Ctx ctx) const {
    const char c = peek();
    switch (ctx) {
      case Ctx::Root: return false;
      case Ctx::Flex: return c == ']';
      case Ctx::Alternative: return c == ',' || c == '}';
      case Ctx::Argument: return c == ',' || c == ')' || at_operator();
    }
    return false;
  }

  bool is_word_break(char c, Ctx ctx) const {
    switch (c) {
      case '{': case '}': case '[': case ']': case '$': case '#': case '=':
        return true;
      case ',':
        return ctx != Ctx::Root;
      case ')':
        return ctx == Ctx::Argument;
      case '!':
        return ctx == Ctx::Argument && peek(1) == '=';
      default:
        return is_space(c);
    }
  }

  void enter(std::size_t open) {
    if (++depth_ > kMaxNestingDepth) {
      fail("nesting deeper than " + std::to_string(kMaxNestingDepth) + " levels", {open, open + 1});
    }
  }
  void leave() { --depth_; }

  static NatexAst group(std::vector<NatexAst> terms) {
    if (terms.size() == 1) return std::move(terms.front());
    Span span{terms.front().span.begin, terms.back().span.end};
    NatexAst node = NatexAst::rigid(std::move(terms));
    node.span = span;
    return node;
  }

  std::vector<NatexAst> parse_sequence(Ctx ctx) {
    std::vector<NatexAst> terms;
    bool previous_was_word = false;
    for (;;) {
      skip_separators(ctx);
      if (at_end() || at_terminator(ctx)) break;
      bool is_word = false;
      NatexAst term = parse_term(ctx, is_word);
      if (is_word && previous_was_word && merges_words(ctx)) {
        NatexAst& last = terms.back();
        last.text += ' ';
        last.text += term.text;
        last.span.end = term.span.end;
      } else {
        terms.push_back(std::move(term));
      }
      previous_was_word = is_word;
    }
    return terms;
  }

  NatexAst parse_term(Ctx ctx, bool& is_word) {
    is_word = false;
    const char c = peek();
    switch (c) {
      case '[': return parse_flex();
      case '{': return parse_disjunction();
      case '$': return parse_variable(ctx);
      case '#': return parse_call();
      case ']': case '}':
        fail(std::string("unexpected '") + c + "' without matching opener", {pos_, pos_ + 1});
      case '=':
        fail("unexpected '='", {pos_, pos_ + 1});
      case ')':
        if (ctx == Ctx::Argument) fail("unexpected ')'", {pos_, pos_ + 1});
        break;
      default:
        break;
    }
    is_word = true;
    return parse_word(ctx);
  }

  NatexAst parse_word(Ctx ctx) {
    const std::size_t start = pos_;
    std::string text;
    while (!at_end()) {
      const char c = peek();
      if (c == '\\') {
        if (pos_ + 1 >= src_.size()) fail("dangling escape '\\'", {pos_, pos_ + 1});
        text += src_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      if (is_word_break(c, ctx)) break;
      text += c;
      ++pos_;
    }
    if (text.empty()) fail(std::string("unexpected '") + peek() + "'", {start, start + 1});
    NatexAst node = NatexAst::literal(std::move(text));
    node.span = {start, pos_};
    return node;
  }

  std::string parse_identifier() {
    std::string name;
    while (!at_end() && is_ident_char(peek())) name += src_[pos_++];
    return name;
  }

  NatexAst parse_flex() {
    const std::size_t open = pos_++;
    enter(open);
    auto terms = parse_sequence(Ctx::Flex);
    if (at_end()) fail("unbalanced '['", {open, open + 1});
    if (terms.empty()) fail("empty flexible sequence", {open, pos_ + 1});
    ++pos_;  // ']'
    leave();
    NatexAst node = NatexAst::flex(std::move(terms));
    node.span = {open, pos_};
    return node;
  }

  NatexAst parse_disjunction() {
    const std::size_t open = pos_++;
    enter(open);
    std::vector<NatexAst> alternatives;
    for (;;) {
      skip_separators(Ctx::Alternative);
      if (at_end()) fail("unbalanced '{'", {open, open + 1});
      if (peek() == '}' || peek() == ',') {
        fail(alternatives.empty() && peek() == '}' ? "empty disjunction" : "empty alternative in disjunction",
             {open, pos_ + 1});
      }
      auto terms = parse_sequence(Ctx::Alternative);
      alternatives.push_back(group(std::move(terms)));
      if (at_end()) fail("unbalanced '{'", {open, open + 1});
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      ++pos_;  // '}'
      break;
    }
    leave();
    NatexAst node = NatexAst::disjunction(std::move(alternatives));
    node.span = {open, pos_};
    return node;
  }

  NatexAst parse_variable(Ctx ctx) {
    const std::size_t start = pos_++;
    if (!is_ident_start(peek())) fail("dangling '$' (expected a variable name)", {start, start + 1});
    std::string name = parse_identifier();
    bool qualified = false;
    if (peek() == '.' && is_ident_start(peek(1))) {
      ++pos_;
      name += '.';
      name += parse_identifier();
      qualified = true;
    }
    if (peek() == '=' && peek(1) != '=') {
      const std::size_t eq = pos_++;
      if (qualified) fail("cannot assign to qualified variable '$" + name + "'", {start, pos_});
      if (at_end() || is_space(peek()) || at_terminator(ctx) || peek() == ']') {
        fail("dangling '=' (expected a value after $" + name + "=)", {eq, eq + 1});
      }
      enter(eq);
      bool ignored = false;
      NatexAst value = parse_term(ctx, ignored);
      leave();
      NatexAst node = NatexAst::assignment(std::move(name), std::move(value));
      node.span = {start, pos_};
      return node;
    }
    NatexAst node = NatexAst::variable(std::move(name));
    node.span = {start, pos_};
    return node;
  }

  NatexAst parse_call() {
    const std::size_t start = pos_++;
    if (!is_ident_start(peek())) fail("dangling '#' (expected a function name)", {start, start + 1});
    std::string name = parse_identifier();
    if (peek() != '(') fail("expected '(' after #" + name, {start, pos_});
    ++pos_;
    const Span opener{start, pos_};
    enter(start);
    std::vector<NatexAst> arguments;
    skip_separators(Ctx::Argument);
    if (peek() == ')') {
      ++pos_;
    } else {
      for (;;) {
        arguments.push_back(parse_argument(opener));
        skip_separators(Ctx::Argument);
        if (at_end()) fail("unbalanced '(' in call to #" + name, opener);
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ')') {
          ++pos_;
          break;
        }
        fail("unexpected '" + std::string(1, peek()) + "' in arguments of #" + name, {pos_, pos_ + 1});
      }
    }
    leave();
    NatexAst node = NatexAst::call(std::move(name), std::move(arguments));
    node.span = {start, pos_};
    return node;
  }

  NatexAst parse_argument(const Span& opener) {
    skip_separators(Ctx::Argument);
    if (at_end()) fail("unbalanced '('", opener);
    auto lhs = parse_sequence(Ctx::Argument);
    if (lhs.empty()) fail("empty argument", {pos_, pos_ + 1});
    skip_separators(Ctx::Argument);
    if (!at_operator()) return group(std::move(lhs));
    const std::size_t op_pos = pos_;
    std::string op(src_.substr(pos_, 2));
    pos_ += 2;
    skip_separators(Ctx::Argument);
    auto rhs = parse_sequence(Ctx::Argument);
    if (rhs.empty()) fail("missing right-hand side of '" + op + "'", {op_pos, op_pos + 2});
    NatexAst left = group(std::move(lhs));
    NatexAst right = group(std::move(rhs));
    const Span span{left.span.begin, right.span.end};
    NatexAst node = NatexAst::comparison(std::move(op), std::move(left), std::move(right));
    node.span = span;
    return node;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Formatting

bool needs_escape(char c, Ctx ctx) {
  switch (c) {
    case '\\': case '{': case '}': case '[': case ']': case '$': case '#': case '=':
      return true;
    case ',':
      return ctx != Ctx::Root;
    case ')':
      return ctx == Ctx::Argument;
    default:
      return false;
  }
}

std::string escape_literal(const std::string& text, Ctx ctx, bool single_token) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_space(c)) {
      const bool interior = i > 0 && i + 1 < text.size() && !is_space(text[i - 1]) && !is_space(text[i + 1]);
      if (single_token || c != ' ' || !interior) out += '\\';
      out += c;
      continue;
    }
    if (needs_escape(c, ctx)) out += '\\';
    out += c;
  }
  return out;
}

void format_node(const NatexAst& node, Ctx ctx, bool single_token, std::string& out);

void format_group(const std::vector<NatexAst>& children, Ctx ctx, std::string& out) {
  for (std::size_t i = 0; i < children.size(); ++i) {
    const NatexAst& child = children[i];
    if (i > 0) {
      const bool glue = child.kind == NodeKind::Literal && children[i - 1].kind != NodeKind::Literal &&
                        glues_left(child.text);
      if (!glue) out += ' ';
    }
    format_node(child, ctx, false, out);
  }
}

void format_argument(const NatexAst& arg, std::string& out) {
  if (arg.kind == NodeKind::RigidSequence) {
    format_group(arg.children, Ctx::Argument, out);
  } else {
    format_node(arg, Ctx::Argument, false, out);
  }
}

void format_node(const NatexAst& node, Ctx ctx, bool single_token, std::string& out) {
  switch (node.kind) {
    case NodeKind::Literal:
      out += escape_literal(node.text, ctx, single_token);
      return;
    case NodeKind::FlexSequence:
      out += '[';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ' ';
        format_node(node.children[i], Ctx::Flex, true, out);
      }
      out += ']';
      return;
    case NodeKind::RigidSequence:
      format_group(node.children, ctx, out);
      return;
    case NodeKind::Disjunction:
      out += '{';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ", ";
        const NatexAst& alt = node.children[i];
        if (alt.kind == NodeKind::RigidSequence) {
          format_group(alt.children, Ctx::Alternative, out);
        } else {
          format_node(alt, Ctx::Alternative, false, out);
        }
      }
      out += '}';
      return;
    case NodeKind::Assignment:
      out += '$';
      out += node.text;
      out += '=';
      if (!node.children.empty()) format_node(node.children.front(), ctx, true, out);
      return;
    case NodeKind::VariableRef:
      out += '$';
      out += node.text;
      return;
    case NodeKind::FunctionCall:
      if (node.is_comparison() && node.children.size() == 2) {
        format_argument(node.children[0], out);
        out += ' ';
        out += node.text;
        out += ' ';
        format_argument(node.children[1], out);
        return;
      }
      out += '#';
      out += node.text;
      out += '(';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ", ";
        format_argument(node.children[i], out);
      }
      out += ')';
      return;
  }
}

void debug_node(const NatexAst& node, std::string& out) {
  out += to_string(node.kind);
  switch (node.kind) {
    case NodeKind::Literal:
    case NodeKind::VariableRef:
      out += '(' + node.text + ')';
      return;
    case NodeKind::Assignment:
      out += '(' + node.text + ", ";
      if (!node.children.empty()) debug_node(node.children.front(), out);
      out += ')';
      return;
    case NodeKind::FunctionCall:
      out += '(' + node.text + ", [";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ", ";
        debug_node(node.children[i], out);
      }
      out += "])";
      return;
    default:
      out += '[';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ", ";
        debug_node(node.children[i], out);
      }
      out += ']';
      return;
  }
}

}  // namespace

NatexAst parse(std::string_view source) { return Parser(source).parse_root(); }

std::string format(const NatexAst& ast) {
  std::string out;
  if (ast.kind == NodeKind::RigidSequence) {
    format_group(ast.children, Ctx::Root, out);
  } else {
    format_node(ast, Ctx::Root, false, out);
  }
  return out;
}

std::string to_debug_string(const NatexAst& ast) {
  std::string out;
  debug_node(ast, out);
  return out;
}

void collect_assignments(const NatexAst& ast, std::set<std::string>& out) {
  walk(ast, [&](const NatexAst& node) {
    if (node.kind == NodeKind::Assignment) out.insert(node.text);
  });
}

std::vector<Diagnostic> static_check(const NatexAst& ast,
                                     const std::set<std::string>& known_functions,
                                     const std::set<std::string>& assignable_variables) {
  std::set<std::string> local;
  collect_assignments(ast, local);
  std::vector<Diagnostic> out;
  walk(ast, [&](const NatexAst& node) {
    if (node.kind == NodeKind::FunctionCall && !node.is_comparison() &&
        !known_functions.contains(node.text)) {
      out.push_back(make_error(DiagCode::UnknownFunction,
                               "call to a non-existing function '#" + node.text + "'", node.span));
    } else if (node.kind == NodeKind::VariableRef && !assignable_variables.contains(node.text) &&
               !local.contains(node.text)) {
      out.push_back(make_warning(DiagCode::UnboundVariable,
                                 "reference to a variable nothing assigns: '$" + node.text + "'", node.span));
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return a.span.begin < b.span.begin;
  });
  return out;
}

}  // namespace natflow
