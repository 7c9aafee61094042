#include "emolex/extractor.hpp"

#include <unordered_set>

#include "emolex/io.hpp"
#include "emolex/utf8.hpp"
#include "json.hpp"

namespace emolex {

using nlohmann::ordered_json;

std::string_view to_string(MatchMode m) { return m == MatchMode::kToken ? "token" : "substring"; }

MatchMode parse_match_mode(std::string_view s) {
  if (s == "token") return MatchMode::kToken;
  if (s == "substring") return MatchMode::kSubstring;
  throw Error("unknown match mode \"" + std::string(s) + "\" (expected token or substring)");
}

Extractor::Extractor(const Lexicon& lex, MatchMode mode) : mode_(mode) {
  if (lex.empty()) throw Error("extract: lexicon " + (lex.name().empty() ? "" : lex.name() + " ") + "is empty");
  for (const auto& [term, entry] : lex.entries()) {
    const std::string key = utf8::fold(term);
    if (mode == MatchMode::kToken) {
      auto [it, inserted] = by_folded_.try_emplace(key, Entry{term, entry.labels});
      if (!inserted) it->second.labels |= entry.labels;
    } else if (Entry* e = trie_.find(key)) {
      e->labels |= entry.labels;
    } else {
      trie_.insert(key, Entry{term, entry.labels});
    }
  }
}

void Extractor::record(EmotionProfile& p, const Entry& e, std::size_t offset) const {
  for (Emotion em : e.labels.to_vector()) ++p.counts[static_cast<std::size_t>(em)];
  p.presence |= e.labels;
  p.matched_terms.push_back({e.term, e.labels, offset});
}

EmotionProfile Extractor::extract(std::string_view text) const {
  EmotionProfile p;
  std::vector<utf8::Char> chars = utf8::decode(text);
  if (mode_ == MatchMode::kToken) {
    std::size_t i = 0;
    while (i < chars.size()) {
      while (i < chars.size() && utf8::is_space(chars[i].cp)) ++i;
      std::size_t end = i;
      while (end < chars.size() && !utf8::is_space(chars[end].cp)) ++end;
      std::size_t b = i, e = end;
      while (b < e && utf8::is_punct(chars[b].cp)) ++b;
      while (e > b && utf8::is_punct(chars[e - 1].cp)) --e;
      if (b < e) {
        std::string key;
        for (std::size_t k = b; k < e; ++k) utf8::append(key, utf8::fold(chars[k].cp));
        if (auto it = by_folded_.find(key); it != by_folded_.end()) record(p, it->second, chars[b].offset);
      }
      i = end;
    }
  } else {
    for (auto& c : chars) c.cp = utf8::fold(c.cp);
    std::size_t pos = 0;
    while (pos < chars.size()) {
      if (auto m = trie_.longest_match(chars, pos)) {
        record(p, *m->value, chars[pos].offset);
        pos += m->chars;
      } else {
        ++pos;
      }
    }
  }
  return p;
}

EmotionProfile extract(std::string_view text, const Lexicon& lex, MatchMode mode) {
  return Extractor(lex, mode).extract(text);
}

std::vector<EmotionProfile> extract_all(const Extractor& ex, std::span<const std::string> texts) {
  std::vector<EmotionProfile> out(texts.size());
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = ex.extract(texts[i]);
  return out;
}

namespace reference {
std::vector<EmotionProfile> extract_all(const Extractor& ex, std::span<const std::string> texts) {
  std::vector<EmotionProfile> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(ex.extract(t));
  return out;
}
}  // namespace reference

std::vector<ExtractDocument> parse_documents_jsonl(std::string_view text, const std::string& source) {
  std::vector<ExtractDocument> docs;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text") || !j["id"].is_string() ||
        !j["text"].is_string()) {
      throw ParseError(source, line_no, "expected {\"id\": string, \"text\": string}");
    }
    ExtractDocument d{j["id"].get<std::string>(), j["text"].get<std::string>()};
    if (!ids.insert(d.id).second) throw ParseError(source, line_no, "duplicate document id \"" + d.id + "\"");
    docs.push_back(std::move(d));
  }
  return docs;
}

std::string profile_to_json(const std::string& id, const EmotionProfile& p) {
  ordered_json counts = ordered_json::object();
  for (Emotion e : kAllEmotions) counts[std::string(to_string(e))] = p.count(e);
  ordered_json matches = ordered_json::array();
  for (const auto& m : p.matched_terms) {
    matches.push_back({{"term", m.term}, {"labels", m.labels.names()}, {"offset", m.offset}});
  }
  ordered_json j = {{"id", id}, {"presence", p.presence.names()}, {"counts", counts}, {"matches", matches}};
  return j.dump();
}

}  // namespace emolex
