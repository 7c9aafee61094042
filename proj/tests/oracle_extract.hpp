#pragma once

// Test-only forward-maximum-matching oracle and random lexicon/text generators.

#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "emolex/extractor.hpp"
#include "emolex/utf8.hpp"

namespace oracle {

using namespace emolex;

using Counts = std::array<std::size_t, kNumEmotions>;

// Independent forward-maximum-matching count over code-point strings.
inline Counts fmm_oracle(const std::u32string& text, const std::map<std::u32string, EmotionSet>& lex) {
  std::size_t longest = 0;
  for (const auto& [t, _] : lex) longest = std::max(longest, t.size());
  Counts c{};
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t hit = 0;
    for (std::size_t len = std::min(longest, text.size() - i); len > 0; --len) {
      if (auto it = lex.find(text.substr(i, len)); it != lex.end()) {
        for (Emotion e : it->second.to_vector()) ++c[static_cast<std::size_t>(e)];
        hit = len;
        break;
      }
    }
    i += hit ? hit : 1;
  }
  return c;
}

inline std::u32string to_u32(const std::string& s) {
  std::u32string out;
  for (const auto& c : utf8::decode(s)) out += c.cp;
  return out;
}

struct Gen {
  std::mt19937_64 rng;
  std::vector<std::string> letters;

  explicit Gen(std::uint64_t seed, std::vector<std::string> alphabet) : rng(seed), letters(std::move(alphabet)) {}

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng() % n); }

  EmotionSet labels() {
    EmotionSet s;
    const std::size_t n = 1 + pick(3);
    for (std::size_t i = 0; i < n; ++i) s.insert(kAllEmotions[pick(kNumEmotions)]);
    return s;
  }

  std::string word(std::size_t max_len) {
    std::string w;
    const std::size_t n = 1 + pick(max_len);
    for (std::size_t i = 0; i < n; ++i) w += letters[pick(letters.size())];
    return w;
  }

  Lexicon lexicon(std::size_t n, std::size_t max_len) {
    Lexicon lex("rand");
    for (std::size_t i = 0; i < n; ++i) lex.add(word(max_len), labels());
    return lex;
  }

  std::string text(std::size_t n, const std::vector<std::string>& fillers) {
    std::string t;
    for (std::size_t i = 0; i < n; ++i) {
      t += pick(4) == 0 ? fillers[pick(fillers.size())] : letters[pick(letters.size())];
    }
    return t;
  }
};

inline const std::vector<std::string> kHan = {"好", "開", "心", "嬲", "唔"};
inline const std::vector<std::string> kHanFill = {"，", "。", " ", "a"};
inline const std::vector<std::string> kLatin = {"a", "b", "c", "A"};
inline const std::vector<std::string> kLatinFill = {" ", " ", ", ", "!", "  ", "\t"};

}  // namespace oracle
