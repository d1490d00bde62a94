#pragma once

#include <string>
#include <string_view>

namespace natflow {

/// Lowercases, turns punctuation other than apostrophes into spaces,
/// collapses whitespace runs and trims.
std::string normalize(std::string_view raw);

/// Escapes regex metacharacters so `text` matches itself literally.
std::string escape_regex(std::string_view text);

/// True for bytes the regex engine counts as word characters (`\w`).
bool is_word_byte(char c) noexcept;

/// True iff `phrase` occurs in `text` with a `\b` boundary on both sides.
bool occurs_word_bounded(std::string_view text, std::string_view phrase);

/// Punctuation such as `?` or `!` that attaches to the previous word.
bool glues_left(std::string_view piece) noexcept;

/// Appends `piece` to `surface`, separated by one space unless either side
/// is empty or the piece glues left.
void append_surface(std::string& surface, std::string_view piece);

}  // namespace natflow
