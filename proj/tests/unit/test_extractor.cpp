#include "doctest.h"
#include "emolex/extractor.hpp"
#include "emolex/io.hpp"
#include "oracle_extract.hpp"

using namespace emolex;
using namespace oracle;

TEST_CASE("substring mode: maximum matching over Han text") {
  Lexicon lex;
  lex.add("開心", {Emotion::kJoy, Emotion::kPositive});
  const auto p = extract("好開心", lex, MatchMode::kSubstring);
  CHECK(p.presence == EmotionSet{Emotion::kJoy, Emotion::kPositive});
  CHECK(p.count(Emotion::kJoy) == 1);
  CHECK(p.count(Emotion::kPositive) == 1);
  CHECK(p.count(Emotion::kAnger) == 0);
  REQUIRE(p.matched_terms.size() == 1);
  CHECK(p.matched_terms[0].offset == 3);
  CHECK(p.counts == fmm_oracle(to_u32("好開心"), {{to_u32("開心"), {Emotion::kJoy, Emotion::kPositive}}}));
}

TEST_CASE("token mode: fold, strip, count") {
  Lexicon lex;
  lex.add("awful", {Emotion::kNegative, Emotion::kDisgust});
  const auto p = extract("Awful, awful food", lex, MatchMode::kToken);
  CHECK(p.count(Emotion::kNegative) == 2);
  CHECK(p.count(Emotion::kDisgust) == 2);
  CHECK(p.presence == EmotionSet{Emotion::kNegative, Emotion::kDisgust});
  CHECK(p.matched_terms.size() == 2);
  // Inner punctuation is kept; only the edges are stripped.
  CHECK(extract("aw-ful awful's", lex, MatchMode::kToken).matched_terms.empty());
}

TEST_CASE("no hits gives an empty profile") {
  Lexicon lex;
  lex.add("awful", {Emotion::kNegative});
  for (MatchMode m : {MatchMode::kToken, MatchMode::kSubstring}) {
    const auto p = extract("a perfectly fine day", lex, m);
    CHECK(p.presence.empty());
    CHECK(p.counts == Counts{});
    CHECK(p.matched_terms.empty());
    CHECK(extract("", lex, m) == EmotionProfile{});
  }
}

TEST_CASE("longest term wins and matches do not overlap") {
  Lexicon lex;
  lex.add("開", {Emotion::kAnticipation});
  lex.add("開心", {Emotion::kJoy});
  lex.add("心", {Emotion::kTrust});
  const auto p = extract("開心心開", lex, MatchMode::kSubstring);
  CHECK(p.count(Emotion::kJoy) == 1);
  CHECK(p.count(Emotion::kTrust) == 1);
  CHECK(p.count(Emotion::kAnticipation) == 1);
}

TEST_CASE("neutral entries consume text without adding counts") {
  Lexicon lex;
  lex.add("開心果", {});
  lex.add("開心", {Emotion::kJoy});
  const auto p = extract("開心果", lex, MatchMode::kSubstring);
  CHECK(p.presence.empty());
  CHECK(p.matched_terms.size() == 1);
}

TEST_CASE("empty lexicon and bad mode are errors") {
  CHECK_THROWS_AS(Extractor(Lexicon{}, MatchMode::kToken), Error);
  CHECK_THROWS_AS(parse_match_mode("fuzzy"), Error);
}

TEST_CASE("property: presence iff count > 0 (both modes)") {
  Gen g(1, kHan);
  Gen l(2, kLatin);
  for (int i = 0; i < 300; ++i) {
    const auto han = g.lexicon(1 + g.pick(8), 3);
    const auto lat = l.lexicon(1 + l.pick(8), 3);
    const auto p1 = extract(g.text(g.pick(40), kHanFill), han, MatchMode::kSubstring);
    const auto p2 = extract(l.text(l.pick(40), kLatinFill), lat, MatchMode::kToken);
    for (const auto* p : {&p1, &p2}) {
      for (Emotion e : kAllEmotions) CHECK(p->presence.contains(e) == (p->count(e) > 0));
    }
  }
}

TEST_CASE("property: substring mode equals the maximum-matching oracle") {
  Gen g(3, kHan);
  for (int i = 0; i < 300; ++i) {
    const auto lex = g.lexicon(1 + g.pick(10), 4);
    std::map<std::u32string, EmotionSet> ref;
    for (const auto& [t, e] : lex.entries()) ref[to_u32(t)] |= e.labels;
    const auto text = g.text(g.pick(50), kHanFill);
    CHECK(extract(text, lex, MatchMode::kSubstring).counts == fmm_oracle(to_u32(text), ref));
  }
}

TEST_CASE("property: token-mode additivity over concatenation") {
  Gen g(4, kLatin);
  for (int i = 0; i < 300; ++i) {
    const auto lex = g.lexicon(1 + g.pick(8), 3);
    const Extractor ex(lex, MatchMode::kToken);
    const auto a = g.text(g.pick(30), kLatinFill);
    const auto b = g.text(g.pick(30), kLatinFill);
    const auto pa = ex.extract(a), pb = ex.extract(b), pab = ex.extract(a + " " + b);
    for (std::size_t d = 0; d < kNumEmotions; ++d) CHECK(pab.counts[d] == pa.counts[d] + pb.counts[d]);
  }
}

TEST_CASE("property: substring matches are ordered and non-overlapping") {
  Gen g(5, kHan);
  for (int i = 0; i < 300; ++i) {
    const auto lex = g.lexicon(1 + g.pick(10), 4);
    const auto p = extract(g.text(g.pick(50), kHanFill), lex, MatchMode::kSubstring);
    std::size_t end = 0;
    for (const auto& m : p.matched_terms) {
      CHECK(m.offset >= end);
      end = m.offset + m.term.size();
    }
  }
}

TEST_CASE("property: lexicon monotonicity") {
  Gen g(6, kLatin);
  for (int i = 0; i < 300; ++i) {
    // Token mode: any superset lexicon.
    const auto small = g.lexicon(1 + g.pick(6), 3);
    Lexicon big = small;
    for (std::size_t k = g.pick(6); k > 0; --k) big.add(g.word(3), g.labels());
    const auto text = g.text(g.pick(40), kLatinFill);
    const auto ps = extract(text, small, MatchMode::kToken), pb = extract(text, big, MatchMode::kToken);
    for (std::size_t d = 0; d < kNumEmotions; ++d) CHECK(ps.counts[d] <= pb.counts[d]);
  }

  Gen h(7, kHan);
  for (int i = 0; i < 300; ++i) {
    // Substring mode: extra labels on existing terms, and new terms over characters
    // the smaller lexicon never uses. A new term sharing characters with an old one
    // can legitimately win the longest match and hide it.
    Lexicon small("s");
    for (std::size_t k = 1 + h.pick(5); k > 0; --k) small.add(h.word(3), h.labels());
    Lexicon big = small;
    for (const auto& [t, e] : small.entries()) {
      if (h.pick(2)) big.add(t, h.labels());
    }
    Gen other(100 + i, {"悲", "傷", "驚"});
    for (std::size_t k = h.pick(4); k > 0; --k) big.add(other.word(3), other.labels());
    std::string text;
    for (std::size_t k = h.pick(40); k > 0; --k) text += h.pick(3) ? h.letters[h.pick(5)] : other.letters[h.pick(3)];
    const auto ps = extract(text, small, MatchMode::kSubstring), pb = extract(text, big, MatchMode::kSubstring);
    for (std::size_t d = 0; d < kNumEmotions; ++d) CHECK(ps.counts[d] <= pb.counts[d]);
  }
}

TEST_CASE("parallel extraction equals the serial reference") {
  Gen g(8, kHan);
  const Extractor ex(g.lexicon(20, 3), MatchMode::kSubstring);
  std::vector<std::string> texts;
  for (int i = 0; i < 500; ++i) texts.push_back(g.text(g.pick(60), kHanFill));
  CHECK(extract_all(ex, texts) == reference::extract_all(ex, texts));
}

TEST_CASE("documents and profile JSON") {
  const auto docs = parse_documents_jsonl("{\"id\":\"d1\",\"text\":\"好開心\"}\n\n{\"id\":\"d2\",\"text\":\"\"}\n", "t");
  REQUIRE(docs.size() == 2);
  CHECK_THROWS_AS(parse_documents_jsonl("{\"id\":\"d1\",\"text\":\"x\"}\n{\"id\":\"d1\",\"text\":\"y\"}\n", "t"),
                  ParseError);
  CHECK_THROWS_AS(parse_documents_jsonl("{\"id\":\"d1\"}\n", "t"), ParseError);

  Lexicon lex;
  lex.add("開心", {Emotion::kJoy, Emotion::kPositive});
  const auto json = profile_to_json("d1", extract(docs[0].text, lex, MatchMode::kSubstring));
  CHECK(json ==
        R"({"id":"d1","presence":["joy","positive"],"counts":{"anger":0,"anticipation":0,"disgust":0,"fear":0,)"
        R"("joy":1,"negative":0,"positive":1,"sadness":0,"surprise":0,"trust":0},)"
        R"("matches":[{"term":"開心","labels":["joy","positive"],"offset":3}]})");
}
