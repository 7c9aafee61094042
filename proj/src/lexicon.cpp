#include "emolex/lexicon.hpp"

#include <algorithm>
#include <cstdio>

#include "emolex/io.hpp"
#include "json.hpp"

namespace emolex {

namespace {

constexpr std::array<Provenance, 4> kAllProvenance = {
    Provenance::kNrcTranslated, Provenance::kLlm, Provenance::kHuman, Provenance::kMerged};

bool valid_field(std::string_view s) {
  return !s.empty() && s.find_first_of("\t\n\r") == std::string_view::npos;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kNrcTranslated: return "nrc-translated";
    case Provenance::kLlm: return "llm";
    case Provenance::kHuman: return "human";
    case Provenance::kMerged: return "merged";
  }
  return "?";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  for (Provenance p : kAllProvenance) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string ProvenanceSet::to_string() const {
  std::string out;
  for (Provenance p : kAllProvenance) {
    if (!contains(p)) continue;
    if (!out.empty()) out += ',';
    out += emolex::to_string(p);
  }
  return out;
}

LexiconEntry& Lexicon::add(std::string_view term, EmotionSet labels, ProvenanceSet provenance) {
  if (term.empty()) throw Error("lexicon term must be non-empty");
  auto it = entries_.find(term);
  if (it == entries_.end()) {
    it = entries_.emplace(std::string(term), LexiconEntry{std::string(term), {}, {}}).first;
  }
  it->second.labels |= labels;
  it->second.provenance |= provenance;
  return it->second;
}

const LexiconEntry* Lexicon::find(std::string_view term) const {
  auto it = entries_.find(term);
  return it == entries_.end() ? nullptr : &it->second;
}

bool Lexicon::same_labels(const Lexicon& other) const {
  return std::equal(entries_.begin(), entries_.end(), other.entries_.begin(),
                    other.entries_.end(), [](const auto& a, const auto& b) {
                      return a.first == b.first && a.second.labels == b.second.labels;
                    });
}

Lexicon parse_lexicon_text(std::string_view tsv, const std::string& source, std::string name) {
  Lexicon lex(std::move(name));
  const auto lines = io::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    if (cols.size() != 3 || cols[0].empty()) {
      throw ParseError(source, i + 1, "expected term<TAB>dimension<TAB>flag");
    }
    const auto dim = parse_emotion(cols[1]);
    if (!dim) throw ParseError(source, i + 1, "unknown dimension \"" + std::string(cols[1]) + "\"");
    EmotionSet labels;
    if (cols[2] == "1") {
      labels.insert(*dim);
    } else if (cols[2] != "0") {
      throw ParseError(source, i + 1, "flag must be 0 or 1, got \"" + std::string(cols[2]) + "\"");
    }
    lex.add(cols[0], labels);
  }
  return lex;
}

Lexicon parse_lexicon(const std::filesystem::path& path) {
  return parse_lexicon_text(io::read_file(path), path.string(), path.stem().string());
}

std::string format_lexicon(const Lexicon& lex) {
  std::string out;
  for (const auto& [term, entry] : lex.entries()) {
    if (!valid_field(term)) throw Error("lexicon term contains a tab or newline: " + term);
    for (Emotion e : kAllEmotions) {
      out += term;
      out += '\t';
      out += to_string(e);
      out += entry.labels.contains(e) ? "\t1\n" : "\t0\n";
    }
  }
  return out;
}

void write_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_lexicon(lex));
}

void TranslationMap::add(std::string_view source, std::string_view expression,
                         ProvenanceSet sources) {
  if (source.empty() || expression.empty()) throw Error("translation entries must be non-empty");
  auto it = entries_.find(source);
  if (it == entries_.end()) it = entries_.emplace(std::string(source), std::vector<Expression>{}).first;
  auto& list = it->second;
  auto e = std::find_if(list.begin(), list.end(),
                        [&](const Expression& x) { return x.text == expression; });
  if (e == list.end()) {
    list.push_back({std::string(expression), sources});
  } else {
    e->sources |= sources;
  }
}

TranslationMap parse_translation_map_text(std::string_view tsv, const std::string& source) {
  TranslationMap tmap;
  const auto lines = io::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw ParseError(source, i + 1, "expected source<TAB>expression<TAB>provenance");
    }
    ProvenanceSet prov;
    for (std::string_view name : io::split(cols[2], ',')) {
      auto p = parse_provenance(name);
      if (!p) throw ParseError(source, i + 1, "unknown provenance \"" + std::string(name) + "\"");
      prov.insert(*p);
    }
    tmap.add(cols[0], cols[1], prov);
  }
  return tmap;
}

TranslationMap parse_translation_map(const std::filesystem::path& path) {
  return parse_translation_map_text(io::read_file(path), path.string());
}

std::string format_translation_map(const TranslationMap& tmap) {
  std::string out;
  for (const auto& [src, exprs] : tmap.entries()) {
    for (const Expression& e : exprs) {
      if (!valid_field(src) || !valid_field(e.text)) {
        throw Error("translation entry contains a tab or newline: " + src);
      }
      out += src + '\t' + e.text + '\t' + e.sources.to_string() + '\n';
    }
  }
  return out;
}

Lexicon merge_expressions(const Lexicon& base, const TranslationMap& tmap) {
  for (const auto& [src, exprs] : tmap.entries()) {
    if (!base.contains(src)) throw Error("merge_expressions: unknown source word \"" + src + "\"");
  }
  Lexicon out = base;
  for (const auto& [src, exprs] : tmap.entries()) {
    const EmotionSet labels = base.find(src)->labels;
    for (const Expression& e : exprs) {
      ProvenanceSet prov = e.sources;
      if (out.contains(e.text)) prov.insert(Provenance::kMerged);
      out.add(e.text, labels, prov);
    }
  }
  return out;
}

Lexicon filter_non_neutral(const Lexicon& lex) {
  Lexicon out(lex.name());
  for (const auto& [term, entry] : lex.entries()) {
    if (!entry.labels.empty()) out.add(term, entry.labels, entry.provenance);
  }
  return out;
}

StatsReport lexicon_stats(const Lexicon& lex, const Lexicon* base, const TranslationMap* tmap) {
  if (lex.empty()) throw Error("lexicon_stats: lexicon is empty");
  StatsReport r;
  r.lexicon_name = lex.name();
  r.entries = lex.size();
  for (const auto& [term, entry] : lex.entries()) {
    if (entry.labels.empty()) ++r.neutral_entries;
    for (Emotion e : entry.labels.to_vector()) ++r.label_counts[static_cast<std::size_t>(e)];
  }
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    r.proportions[i] = static_cast<double>(r.label_counts[i]) / static_cast<double>(r.entries);
  }

  if (base != nullptr) r.base_entries = base->size();
  if (base != nullptr && tmap != nullptr) {
    ExpansionStats x;
    std::vector<std::string> seen_expressions;
    for (const auto& [term, entry] : base->entries()) {
      if (entry.labels.empty()) continue;
      ++x.base_words;
      auto it = tmap->entries().find(term);
      if (it == tmap->entries().end()) continue;
      std::size_t added = 0;
      bool by_llm = false;
      bool by_human = false;
      for (const Expression& e : it->second) {
        if (e.sources.contains(Provenance::kNrcTranslated)) continue;
        ++added;
        by_llm = by_llm || e.sources.contains(Provenance::kLlm);
        by_human = by_human || e.sources.contains(Provenance::kHuman);
      }
      if (added == 0) continue;
      ++x.gained_any;
      if (added == 1) ++x.gained_one;
      else if (added == 2) ++x.gained_two;
      else ++x.gained_three_plus;
      x.llm_words += by_llm ? 1 : 0;
      x.human_words += by_human ? 1 : 0;
    }
    for (const auto& [src, exprs] : tmap->entries()) {
      for (const Expression& e : exprs) seen_expressions.push_back(e.text);
    }
    std::sort(seen_expressions.begin(), seen_expressions.end());
    x.distinct_expressions = static_cast<std::size_t>(
        std::unique(seen_expressions.begin(), seen_expressions.end()) - seen_expressions.begin());
    r.expansion = x;
  }
  return r;
}

namespace {

// Polarities first, then emotions alphabetically.
constexpr std::array<Emotion, kNumEmotions> kTableOrder = {
    Emotion::kNegative, Emotion::kPositive, Emotion::kAnger,   Emotion::kAnticipation,
    Emotion::kDisgust,  Emotion::kFear,     Emotion::kJoy,     Emotion::kSadness,
    Emotion::kSurprise, Emotion::kTrust};

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string stats_to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["lexicon"] = r.lexicon_name;
  j["entries"] = r.entries;
  j["neutral_entries"] = r.neutral_entries;
  nlohmann::ordered_json props = nlohmann::ordered_json::object();
  for (Emotion e : kTableOrder) {
    const auto i = static_cast<std::size_t>(e);
    props[std::string(to_string(e))] = {{"count", r.label_counts[i]},
                                        {"proportion", r.proportions[i]}};
  }
  j["labels"] = props;
  if (r.base_entries) j["base_entries"] = *r.base_entries;
  if (r.expansion) {
    const ExpansionStats& x = *r.expansion;
    auto bucket = [&](std::size_t n) {
      return nlohmann::ordered_json{{"count", n}, {"percent", x.percent(n)}};
    };
    j["expansion"] = {{"base_words", x.base_words},
                      {"gained_any", bucket(x.gained_any)},
                      {"gained_one", bucket(x.gained_one)},
                      {"gained_two", bucket(x.gained_two)},
                      {"gained_three_plus", bucket(x.gained_three_plus)},
                      {"by_llm", bucket(x.llm_words)},
                      {"by_human", bucket(x.human_words)},
                      {"distinct_expressions", x.distinct_expressions}};
  }
  return j.dump(2) + "\n";
}

std::string stats_to_table(const StatsReport& r) {
  std::string out = pad("Emotion label", 16) + "Proportion\n";
  for (Emotion e : kTableOrder) {
    out += pad(std::string(to_string(e)), 16) +
           io::format_fixed(r.proportions[static_cast<std::size_t>(e)], 3) + "\n";
  }
  out += "\n" + pad("entries", 24) + std::to_string(r.entries) + "\n";
  if (r.base_entries) out += pad("base entries", 24) + std::to_string(*r.base_entries) + "\n";
  if (r.expansion) {
    const ExpansionStats& x = *r.expansion;
    auto row = [&](const char* label, std::size_t n) {
      out += pad(label, 24) + std::to_string(n) + " (" + io::format_fixed(x.percent(n), 1) + "%)\n";
    };
    out += pad("base words", 24) + std::to_string(x.base_words) + "\n";
    row("+1 expression", x.gained_one);
    row("+2 expressions", x.gained_two);
    row("+3 or more", x.gained_three_plus);
    row("expressions by llm", x.llm_words);
    row("expressions by human", x.human_words);
  }
  return out;
}

}  // namespace emolex
