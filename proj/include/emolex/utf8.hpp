#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace emolex::utf8 {

/// One decoded character: its code point and the byte span it came from.
/// Invalid bytes decode as U+FFFD with a one-byte span so that spans always
/// tile the input.
struct Char {
  char32_t cp;
  std::size_t offset;
  std::size_t length;
};

std::vector<Char> decode(std::string_view s);

std::size_t length(std::string_view s);

void append(std::string& out, char32_t cp);

bool is_han(char32_t cp);
bool is_space(char32_t cp);
/// ASCII and general CJK/Unicode punctuation blocks.
bool is_punct(char32_t cp);

/// Simple case folding: ASCII, Latin-1 and Greek/Cyrillic capitals.
char32_t fold(char32_t cp);
std::string fold(std::string_view s);

/// Lexicographic comparison by code point. For valid UTF-8 this matches
/// byte order, which is what std::string comparison gives.
inline bool codepoint_less(std::string_view a, std::string_view b) { return a < b; }

}  // namespace emolex::utf8
