// Parallel kernels against their serial reference implementations.

#include <benchmark/benchmark.h>

#include <random>

#include "emolex/corpus.hpp"
#include "emolex/extractor.hpp"
#include "emolex/reliability.hpp"
#include "emolex/tfidf.hpp"

using namespace emolex;

namespace {

const std::vector<std::string> kChars = {"好", "開", "心", "嬲", "唔", "靚", "驚", "悶", "煩", "攰", "，", "。"};

std::string random_text(std::mt19937_64& rng, std::size_t len) {
  std::string t;
  for (std::size_t i = 0; i < len; ++i) t += kChars[rng() % kChars.size()];
  return t;
}

ReliabilityMatrix make_matrix(std::size_t units) {
  std::mt19937_64 rng(1);
  std::vector<std::string> us, rs = {"r0", "r1", "r2"};
  for (std::size_t u = 0; u < units; ++u) us.push_back("u" + std::to_string(u));
  ReliabilityMatrix m(us, rs);
  for (std::size_t u = 0; u < units; ++u) {
    const int anchor = static_cast<int>(rng() % 2);
    for (std::size_t r = 0; r < 3; ++r) {
      if (rng() % 10 == 0) continue;
      m.set(u, r, rng() % 4 == 0 ? static_cast<int>(rng() % 2) : anchor);
    }
  }
  return m;
}

struct ExtractSetup {
  Extractor ex;
  std::vector<std::string> texts;

  static ExtractSetup make(std::size_t docs) {
    std::mt19937_64 rng(2);
    Lexicon lex("bench");
    for (int i = 0; i < 400; ++i) {
      lex.add(random_text(rng, 1 + rng() % 3), {kAllEmotions[rng() % kNumEmotions], kAllEmotions[rng() % kNumEmotions]});
    }
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < docs; ++i) texts.push_back(random_text(rng, 200));
    return {Extractor(lex, MatchMode::kSubstring), std::move(texts)};
  }
};

struct MineSetup {
  Corpus corpus;
  SegmenterDictionary dict;

  static MineSetup make(std::size_t docs) {
    std::mt19937_64 rng(3);
    MineSetup s;
    for (int i = 0; i < 300; ++i) s.dict.add(random_text(rng, 2 + rng() % 2), rng() % 3 ? "a" : "n");
    for (std::size_t i = 0; i < docs; ++i) s.corpus.documents.push_back({"t" + std::to_string(i), random_text(rng, 300)});
    return s;
  }
};

void BM_alpha_parallel(benchmark::State& state) {
  const auto m = make_matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(krippendorff_alpha(m));
}

void BM_alpha_reference(benchmark::State& state) {
  const auto m = make_matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::krippendorff_alpha(m));
}

void BM_extract_parallel(benchmark::State& state) {
  const auto s = ExtractSetup::make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_all(s.ex, s.texts));
}

void BM_extract_reference(benchmark::State& state) {
  const auto s = ExtractSetup::make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::extract_all(s.ex, s.texts));
}

void BM_mine_parallel(benchmark::State& state) {
  const auto s = MineSetup::make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mine_terms(s.corpus, s.dict));
}

void BM_mine_reference(benchmark::State& state) {
  const auto s = MineSetup::make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::mine_terms(s.corpus, s.dict));
}

}  // namespace

BENCHMARK(BM_alpha_parallel)->Arg(10000)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_alpha_reference)->Arg(10000)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_parallel)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_reference)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mine_parallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mine_reference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
