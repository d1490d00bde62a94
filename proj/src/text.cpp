#include "natflow/text.hpp"

namespace natflow {

namespace {
bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 0x21 && u <= 0x2F) || (u >= 0x3A && u <= 0x40) || (u >= 0x5B && u <= 0x60) ||
         (u >= 0x7B && u <= 0x7E);
}
}  // namespace

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const char c : raw) {
    if (is_ascii_space(c) || (is_ascii_punct(c) && c != '\'')) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

std::string escape_regex(std::string_view text) {
  std::string out;
  out.reserve(text.size() * 2);
  for (const char c : text) {
    switch (c) {
      case '\\': case '^': case '$': case '.': case '|': case '?': case '*': case '+':
      case '(': case ')': case '[': case ']': case '{': case '}':
        out += '\\';
        break;
      default:
        break;
    }
    out += c;
  }
  return out;
}

bool is_word_byte(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool occurs_word_bounded(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  const auto boundary = [&](std::size_t at) {
    const bool before = at > 0 && is_word_byte(text[at - 1]);
    const bool after = at < text.size() && is_word_byte(text[at]);
    return before != after;
  };
  for (auto at = text.find(phrase); at != std::string_view::npos; at = text.find(phrase, at + 1)) {
    if (boundary(at) && boundary(at + phrase.size())) return true;
  }
  return false;
}

bool glues_left(std::string_view piece) noexcept {
  if (piece.empty()) return false;
  switch (piece[0]) {
    case '?': case '!': case ',': case ';': case ':': case ')': case '\'': case '"': case '%':
      return true;
    case '.':
      // `.x` would read back as a qualified variable name
      return piece.size() < 2 || !((piece[1] >= 'a' && piece[1] <= 'z') || (piece[1] >= 'A' && piece[1] <= 'Z') ||
                                   piece[1] == '_');
    default:
      return false;
  }
}

void append_surface(std::string& surface, std::string_view piece) {
  if (piece.empty()) return;
  if (!surface.empty() && !glues_left(piece)) surface += ' ';
  surface += piece;
}

}  // namespace natflow
