#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emolex/emotion.hpp"
#include "emolex/lexicon.hpp"
#include "emolex/trie.hpp"

namespace emolex {

/// token: whitespace-delimited words, punctuation stripped, case-folded.
/// substring: forward maximum matching over the character sequence.
enum class MatchMode { kToken, kSubstring };

std::string_view to_string(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

struct TermMatch {
  std::string term;     // lexicon spelling
  EmotionSet labels;
  std::size_t offset;   // byte offset in the text

  bool operator==(const TermMatch&) const = default;
};

struct EmotionProfile {
  EmotionSet presence;
  std::array<std::size_t, kNumEmotions> counts{};
  std::vector<TermMatch> matched_terms;

  std::size_t count(Emotion e) const { return counts[static_cast<std::size_t>(e)]; }
  bool operator==(const EmotionProfile&) const = default;
};

/// Matching index built once per lexicon; immutable and shareable.
class Extractor {
 public:
  Extractor(const Lexicon& lex, MatchMode mode);

  EmotionProfile extract(std::string_view text) const;
  MatchMode mode() const { return mode_; }

 private:
  struct Entry {
    std::string term;
    EmotionSet labels;
  };

  void record(EmotionProfile& p, const Entry& e, std::size_t offset) const;

  MatchMode mode_;
  std::unordered_map<std::string, Entry> by_folded_;  // token mode
  PrefixTrie<Entry> trie_;                            // substring mode
};

EmotionProfile extract(std::string_view text, const Lexicon& lex, MatchMode mode);

/// One profile per text, in input order.
std::vector<EmotionProfile> extract_all(const Extractor& ex, std::span<const std::string> texts);

namespace reference {
std::vector<EmotionProfile> extract_all(const Extractor& ex, std::span<const std::string> texts);
}

struct ExtractDocument {
  std::string id;
  std::string text;
};

/// Lines of {"id": ..., "text": ...}.
std::vector<ExtractDocument> parse_documents_jsonl(std::string_view text, const std::string& source);

/// {"id","presence":[labels],"counts":{dim:n},"matches":[{"term","labels","offset"}]}
std::string profile_to_json(const std::string& id, const EmotionProfile& p);

}  // namespace emolex
