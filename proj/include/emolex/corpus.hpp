#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emolex/trie.hpp"

namespace emolex {

/// A thread: topic and replies joined by '\n'.
struct Document {
  std::string id;
  std::string text;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

/// Parses newline-delimited {"id", "topic", "replies"} records. Blank lines
/// are skipped. An empty input yields an empty corpus and a warning.
Corpus parse_corpus(std::string_view jsonl, const std::string& source,
                    std::vector<std::string>* warnings = nullptr);
Corpus load_corpus(const std::filesystem::path& path,
                   std::vector<std::string>* warnings = nullptr);

/// Fallback tag for out-of-dictionary characters and runs.
inline constexpr std::string_view kUnknownPos = "x";

/// Tags accepted in dictionary files (jieba / ICTCLAS alphabet).
bool is_known_pos(std::string_view tag);

class SegmenterDictionary {
 public:
  SegmenterDictionary() = default;

  /// Parses "term<TAB>pos" rows. Later rows for the same term win.
  static SegmenterDictionary parse(std::string_view tsv, const std::string& source);
  static SegmenterDictionary load(const std::filesystem::path& path);

  void add(std::string_view term, std::string_view pos);

  const std::string* pos(std::string_view term) const { return trie_.find(term); }
  const PrefixTrie<std::string>& trie() const { return trie_; }
  std::size_t size() const { return trie_.size(); }
  bool empty() const { return trie_.empty(); }
  std::size_t max_term_length() const { return max_len_; }

 private:
  PrefixTrie<std::string> trie_;
  std::size_t max_len_ = 0;
};

struct Token {
  std::string surface;
  std::string pos;

  bool operator==(const Token&) const = default;
};

/// Forward maximum matching. Han and punctuation positions take the longest
/// dictionary match (or one character tagged "x"); whitespace runs and runs
/// of other scripts are emitted whole. Surfaces always tile the input.
std::vector<Token> segment_text(std::string_view text, const SegmenterDictionary& dict);

/// Whitespace tokens carry no term and are not counted by TF.
bool is_term(const Token& t);

}  // namespace emolex
