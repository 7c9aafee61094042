#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emolex/emotion.hpp"

namespace emolex {

enum class Provenance : unsigned {
  kNrcTranslated = 1u << 0,
  kLlm = 1u << 1,
  kHuman = 1u << 2,
  kMerged = 1u << 3,
};

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

class ProvenanceSet {
 public:
  ProvenanceSet() = default;
  ProvenanceSet(std::initializer_list<Provenance> init) {
    for (Provenance p : init) insert(p);
  }
  void insert(Provenance p) { bits_ |= static_cast<unsigned>(p); }
  bool contains(Provenance p) const { return (bits_ & static_cast<unsigned>(p)) != 0; }
  bool empty() const { return bits_ == 0; }
  ProvenanceSet& operator|=(const ProvenanceSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  bool operator==(const ProvenanceSet&) const = default;
  /// Comma-separated names in declaration order.
  std::string to_string() const;

 private:
  unsigned bits_ = 0;
};

struct LexiconEntry {
  std::string term;
  EmotionSet labels;
  ProvenanceSet provenance;

  bool operator==(const LexiconEntry&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Adds the term if absent, otherwise unions labels and provenance.
  LexiconEntry& add(std::string_view term, EmotionSet labels, ProvenanceSet provenance = {});

  const LexiconEntry* find(std::string_view term) const;
  bool contains(std::string_view term) const { return find(term) != nullptr; }
  bool erase(std::string_view term) { return entries_.erase(std::string(term)) > 0; }

  /// Entries keyed and iterated in code-point order of the term.
  const std::map<std::string, LexiconEntry, std::less<>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Term and label equality; names and provenance are not compared.
  bool same_labels(const Lexicon& other) const;

 private:
  std::string name_;
  std::map<std::string, LexiconEntry, std::less<>> entries_;
};

/// NRC word-level layout: "term<TAB>dimension<TAB>flag", flag in {0,1}.
Lexicon parse_lexicon_text(std::string_view tsv, const std::string& source, std::string name = {});
Lexicon parse_lexicon(const std::filesystem::path& path);

/// Ten rows per term in canonical dimension order, terms in code-point order.
std::string format_lexicon(const Lexicon& lex);
void write_lexicon(const Lexicon& lex, const std::filesystem::path& path);

struct Expression {
  std::string text;
  ProvenanceSet sources;

  bool operator==(const Expression&) const = default;
};

/// Source word -> target expressions. Order of first insertion is kept and
/// duplicates merge their sources.
class TranslationMap {
 public:
  void add(std::string_view source, std::string_view expression, ProvenanceSet sources);

  const std::map<std::string, std::vector<Expression>, std::less<>>& entries() const {
    return entries_;
  }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const TranslationMap&) const = default;

 private:
  std::map<std::string, std::vector<Expression>, std::less<>> entries_;
};

/// "source<TAB>expression<TAB>provenance[,provenance...]" rows.
TranslationMap parse_translation_map_text(std::string_view tsv, const std::string& source);
TranslationMap parse_translation_map(const std::filesystem::path& path);
std::string format_translation_map(const TranslationMap& tmap);

/// Every expression inherits its source word's labels. An expression that
/// already has an entry keeps it, unions labels, and is marked merged.
Lexicon merge_expressions(const Lexicon& base, const TranslationMap& tmap);

Lexicon filter_non_neutral(const Lexicon& lex);

struct ExpansionStats {
  std::size_t base_words = 0;  // non-neutral base entries (the denominator)
  std::size_t gained_any = 0;
  std::size_t gained_one = 0;
  std::size_t gained_two = 0;
  std::size_t gained_three_plus = 0;
  std::size_t llm_words = 0;
  std::size_t human_words = 0;
  std::size_t distinct_expressions = 0;

  double percent(std::size_t count) const {
    return base_words == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(base_words);
  }
};

struct StatsReport {
  std::string lexicon_name;
  std::size_t entries = 0;
  std::size_t neutral_entries = 0;
  std::array<std::size_t, kNumEmotions> label_counts{};
  std::array<double, kNumEmotions> proportions{};
  std::optional<std::size_t> base_entries;
  std::optional<ExpansionStats> expansion;
};

/// Label proportions over all entries; with a base lexicon and translation
/// map, also the additional-expression breakdown. Additional expressions are
/// those not tagged nrc-translated.
StatsReport lexicon_stats(const Lexicon& lex, const Lexicon* base = nullptr,
                          const TranslationMap* tmap = nullptr);

std::string stats_to_json(const StatsReport& report);
std::string stats_to_table(const StatsReport& report);

}  // namespace emolex
