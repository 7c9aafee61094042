#include <random>

#include "doctest.h"
#include "emolex/io.hpp"
#include "emolex/lexicon.hpp"

using namespace emolex;

namespace {

Lexicon random_lexicon(std::mt19937& rng, std::size_t n) {
  static const std::vector<std::string> kTerms = {"happy", "sad",  "開心", "嬲",  "驚",   "awful",
                                                  "靚",    "正",   "hope", "war", "cake", "死火"};
  Lexicon lex("r");
  for (std::size_t i = 0; i < n; ++i) {
    lex.add(kTerms[rng() % kTerms.size()], EmotionSet::from_bits(rng() % 1024));
  }
  return lex;
}

}  // namespace

TEST_CASE("parse_lexicon flag semantics") {
  std::string tsv;
  for (Emotion e : kAllEmotions) {
    tsv += "scared\t" + std::string(to_string(e)) + (e == Emotion::kFear ? "\t1\n" : "\t0\n");
  }
  Lexicon lex = parse_lexicon_text(tsv, "fixture");
  REQUIRE(lex.size() == 1);
  CHECK(lex.find("scared")->labels == EmotionSet{Emotion::kFear});

  Lexicon neutral = parse_lexicon_text("calm\tjoy\t0\ncalm\tfear\t0\n", "n");
  CHECK(neutral.find("calm")->labels.empty());
}

TEST_CASE("parse_lexicon errors name the row") {
  try {
    parse_lexicon_text("a\tjoy\t1\nx\tjoy\t2\n", "f.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("f.tsv:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_lexicon_text("x\thappiness\t1\n", "f"), ParseError);
  CHECK_THROWS_AS(parse_lexicon_text("x\tjoy\n", "f"), ParseError);
}

TEST_CASE("write_lexicon layout") {
  Lexicon one;
  one.add("好", {Emotion::kJoy});
  const std::string text = format_lexicon(one);
  CHECK(io::split_lines(text).size() == 10);
  CHECK(io::split_lines(text)[4] == "好\tjoy\t1");
  CHECK(format_lexicon(Lexicon{}).empty());

  Lexicon two;
  two.add("b", {Emotion::kFear});
  two.add("a", {});
  CHECK(io::split_lines(format_lexicon(two))[0] == "a\tanger\t0");

  const auto dir = std::filesystem::temp_directory_path() / "emolex_lexicon_test";
  std::filesystem::create_directories(dir);
  write_lexicon(two, dir / "a.tsv");
  write_lexicon(two, dir / "b.tsv");
  CHECK(io::read_file(dir / "a.tsv") == io::read_file(dir / "b.tsv"));
  CHECK(parse_lexicon(dir / "a.tsv").same_labels(two));
  CHECK_THROWS_AS(write_lexicon(two, "/nonexistent-dir/x.tsv"), Error);
}

TEST_CASE("parse and write are inverse on random lexicons") {
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    Lexicon lex = random_lexicon(rng, rng() % 12);
    const std::string text = format_lexicon(lex);
    Lexicon back = parse_lexicon_text(text, "rt");
    CHECK(back.same_labels(lex));
    CHECK(format_lexicon(back) == text);
  }
}

TEST_CASE("merge_expressions") {
  Lexicon base("en");
  base.add("pretty", {Emotion::kJoy, Emotion::kPositive});
  base.add("trusty", {Emotion::kTrust});

  SUBCASE("expressions inherit labels") {
    TranslationMap tmap;
    tmap.add("pretty", "靚", {Provenance::kHuman});
    tmap.add("pretty", "正", {Provenance::kLlm});
    Lexicon out = merge_expressions(base, tmap);
    CHECK(out.find("靚")->labels == EmotionSet{Emotion::kJoy, Emotion::kPositive});
    CHECK(out.find("正")->labels == EmotionSet{Emotion::kJoy, Emotion::kPositive});
    CHECK(out.find("正")->provenance == ProvenanceSet{Provenance::kLlm});
  }
  SUBCASE("collision unions labels and marks merged") {
    TranslationMap tmap;
    tmap.add("trusty", "可靠", {Provenance::kNrcTranslated});
    tmap.add("pretty", "可靠", {Provenance::kHuman});
    Lexicon out = merge_expressions(base, tmap);
    const LexiconEntry* e = out.find("可靠");
    CHECK(e->labels == EmotionSet{Emotion::kJoy, Emotion::kPositive, Emotion::kTrust});
    CHECK(e->provenance.contains(Provenance::kMerged));
  }
  SUBCASE("empty map is identity") {
    Lexicon out = merge_expressions(base, TranslationMap{});
    CHECK(out.same_labels(base));
  }
  SUBCASE("unknown source word") {
    TranslationMap tmap;
    tmap.add("ghost", "鬼", {Provenance::kLlm});
    CHECK_THROWS_AS(merge_expressions(base, tmap), Error);
  }
}

TEST_CASE("merge_expressions never removes labels") {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    Lexicon base = random_lexicon(rng, 1 + rng() % 10);
    std::vector<std::string> sources;
    for (const auto& [t, e] : base.entries()) sources.push_back(t);
    TranslationMap tmap;
    for (int k = 0; k < 5; ++k) {
      tmap.add(sources[rng() % sources.size()], sources[rng() % sources.size()] + (k % 2 ? "x" : ""),
               {Provenance::kLlm});
    }
    Lexicon out = merge_expressions(base, tmap);
    for (const auto& [term, entry] : base.entries()) {
      CHECK(entry.labels.subset_of(out.find(term)->labels));
    }
  }
}

TEST_CASE("filter_non_neutral") {
  Lexicon lex;
  lex.add("a", {Emotion::kJoy});
  lex.add("b", {});
  Lexicon f = filter_non_neutral(lex);
  CHECK(f.size() == 1);
  CHECK(f.contains("a"));
  CHECK(filter_non_neutral(f).same_labels(f));

  Lexicon all_neutral;
  all_neutral.add("x", {});
  CHECK(filter_non_neutral(all_neutral).empty());
}

TEST_CASE("translation map file round trip and dedup") {
  TranslationMap tmap;
  tmap.add("pretty", "漂亮", {Provenance::kNrcTranslated});
  tmap.add("pretty", "靚", {Provenance::kHuman});
  tmap.add("pretty", "靚", {Provenance::kLlm});
  REQUIRE(tmap.entries().at("pretty").size() == 2);
  CHECK(tmap.entries().at("pretty")[0].text == "漂亮");
  CHECK(tmap.entries().at("pretty")[1].sources == ProvenanceSet{Provenance::kLlm, Provenance::kHuman});
  const std::string text = format_translation_map(tmap);
  CHECK(text == "pretty\t漂亮\tnrc-translated\npretty\t靚\tllm,human\n");
  CHECK(parse_translation_map_text(text, "t") == tmap);
  CHECK_THROWS_AS(parse_translation_map_text("a\tb\tvendor\n", "t"), ParseError);
}

TEST_CASE("lexicon_stats proportions") {
  // Hand count: 2 of 4 entries carry "negative".
  Lexicon lex("four");
  lex.add("a", {Emotion::kNegative, Emotion::kAnger});
  lex.add("b", {Emotion::kNegative});
  lex.add("c", {Emotion::kPositive});
  lex.add("d", {Emotion::kJoy, Emotion::kPositive});
  StatsReport r = lexicon_stats(lex);
  CHECK(r.proportions[static_cast<std::size_t>(Emotion::kNegative)] == 0.5);
  CHECK(r.proportions[static_cast<std::size_t>(Emotion::kAnger)] == 0.25);
  double sum = 0;
  for (double p : r.proportions) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    sum += p;
  }
  CHECK(sum > 1.0);  // multi-label
  const std::string table = stats_to_table(r);
  CHECK(table.find("negative        0.500") != std::string::npos);
  CHECK(io::split_lines(table)[1].rfind("negative", 0) == 0);
  CHECK_THROWS_AS(lexicon_stats(Lexicon{}), Error);
}

TEST_CASE("lexicon_stats expansion buckets") {
  Lexicon base("en");
  for (int i = 0; i < 10; ++i) base.add("w" + std::to_string(i), {Emotion::kFear});
  base.add("neutral", {});
  TranslationMap tmap;
  for (int i = 0; i < 10; ++i) tmap.add("w" + std::to_string(i), "t" + std::to_string(i), {Provenance::kNrcTranslated});
  tmap.add("w0", "x0", {Provenance::kLlm});                          // +1
  tmap.add("w1", "x1", {Provenance::kHuman});                        // +1
  tmap.add("w2", "x2a", {Provenance::kLlm});                         // +2
  tmap.add("w2", "x2b", {Provenance::kHuman});
  for (int k = 0; k < 4; ++k) tmap.add("w3", "x3" + std::to_string(k), {Provenance::kLlm});  // +4
  tmap.add("neutral", "n0", {Provenance::kLlm});

  Lexicon merged = filter_non_neutral(merge_expressions(base, tmap));
  StatsReport r = lexicon_stats(merged, &base, &tmap);
  REQUIRE(r.expansion);
  const ExpansionStats& x = *r.expansion;
  CHECK(x.base_words == 10);
  CHECK(x.gained_one == 2);
  CHECK(x.gained_two == 1);
  CHECK(x.gained_three_plus == 1);
  CHECK(x.gained_any == x.gained_one + x.gained_two + x.gained_three_plus);
  CHECK(x.llm_words == 3);
  CHECK(x.human_words == 2);
  CHECK(*r.base_entries == 11);
  CHECK(stats_to_json(r).find("\"gained_three_plus\"") != std::string::npos);
}
