#include "emolex/corpus.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "emolex/io.hpp"
#include "json.hpp"

namespace emolex {

using nlohmann::json;

Corpus parse_corpus(std::string_view jsonl, const std::string& source,
                    std::vector<std::string>* warnings) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  const auto lines = io::split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, i + 1, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
        !rec.contains("topic") || !rec["topic"].is_string() || !rec.contains("replies") ||
        !rec["replies"].is_array()) {
      throw ParseError(source, i + 1,
                       "record needs string \"id\", string \"topic\", array \"replies\"");
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.text = rec["topic"].get<std::string>();
    for (const json& r : rec["replies"]) {
      if (!r.is_string()) throw ParseError(source, i + 1, "reply is not a string");
      doc.text.push_back('\n');
      doc.text += r.get<std::string>();
    }
    if (!seen.insert(doc.id).second) {
      throw ParseError(source, i + 1, "duplicate document id \"" + doc.id + "\"");
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.empty() && warnings != nullptr) {
    warnings->push_back(source + ": corpus is empty");
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_corpus(io::read_file(path), path.string(), warnings);
}

bool is_known_pos(std::string_view tag) {
  static constexpr std::array<std::string_view, 60> kTags = {
      "a",  "ad", "ag", "an",  "b",  "c",   "d",    "df",  "dg",  "e",  "eng", "f",
      "g",  "h",  "i",  "j",   "k",  "l",   "m",    "mg",  "mq",  "n",  "ng",  "nr",
      "nrfg", "nrt", "ns", "nt", "nz", "o",  "p",    "q",   "r",   "rg", "rr",  "rz",
      "s",  "t",  "tg", "u",   "ud", "ug",  "uj",   "ul",  "uv",  "uz", "v",   "vd",
      "vg", "vi", "vn", "vq",  "x",  "y",   "z",    "zg",  "w",   "yg", "un",  "nx"};
  return std::find(kTags.begin(), kTags.end(), tag) != kTags.end();
}

SegmenterDictionary SegmenterDictionary::parse(std::string_view tsv, const std::string& source) {
  SegmenterDictionary dict;
  const auto lines = io::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = io::split(lines[i], '\t');
    if (cols.size() != 2) throw ParseError(source, i + 1, "expected term<TAB>pos");
    if (cols[0].empty()) throw ParseError(source, i + 1, "empty term");
    if (!is_known_pos(cols[1])) {
      throw ParseError(source, i + 1, "unknown POS tag \"" + std::string(cols[1]) + "\"");
    }
    dict.add(cols[0], cols[1]);
  }
  return dict;
}

SegmenterDictionary SegmenterDictionary::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

void SegmenterDictionary::add(std::string_view term, std::string_view pos) {
  if (term.empty()) throw Error("dictionary term must be non-empty");
  trie_.insert(term, std::string(pos));
  max_len_ = std::max(max_len_, utf8::length(term));
}

namespace {

bool is_other_script(char32_t cp) {
  return !utf8::is_han(cp) && !utf8::is_space(cp) && !utf8::is_punct(cp);
}

}  // namespace

std::vector<Token> segment_text(std::string_view text, const SegmenterDictionary& dict) {
  std::vector<Token> tokens;
  const std::vector<utf8::Char> chars = utf8::decode(text);
  auto span_of = [&](std::size_t from, std::size_t to) {
    const std::size_t begin = chars[from].offset;
    const std::size_t end = chars[to - 1].offset + chars[to - 1].length;
    return std::string(text.substr(begin, end - begin));
  };

  std::size_t i = 0;
  while (i < chars.size()) {
    const char32_t cp = chars[i].cp;
    std::size_t j = i + 1;
    if (utf8::is_space(cp)) {
      while (j < chars.size() && utf8::is_space(chars[j].cp)) ++j;
      tokens.push_back({span_of(i, j), std::string(kUnknownPos)});
    } else if (is_other_script(cp)) {
      while (j < chars.size() && is_other_script(chars[j].cp)) ++j;
      std::string surface = span_of(i, j);
      const std::string* pos = dict.pos(surface);
      tokens.push_back({std::move(surface), pos ? *pos : std::string(kUnknownPos)});
    } else if (auto m = dict.trie().longest_match(chars, i)) {
      j = i + m->chars;
      tokens.push_back({span_of(i, j), *m->value});
    } else {
      tokens.push_back({span_of(i, j), std::string(kUnknownPos)});
    }
    i = j;
  }
  return tokens;
}

bool is_term(const Token& t) {
  for (const utf8::Char& c : utf8::decode(t.surface)) {
    if (!utf8::is_space(c.cp)) return true;
  }
  return false;
}

}  // namespace emolex
