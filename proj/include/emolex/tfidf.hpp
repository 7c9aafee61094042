#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emolex/corpus.hpp"

namespace emolex {

/// Per-document term counts produced by one segmentation pass.
struct DocumentTerms {
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;  // non-whitespace tokens
};

struct SegmentedCorpus {
  std::vector<DocumentTerms> docs;
  // Term surface -> POS tag, as assigned during segmentation.
  std::unordered_map<std::string, std::string> pos;
  // Term surface -> number of documents containing it.
  std::unordered_map<std::string, std::size_t> df;
};

/// Segments every document (in parallel) and gathers document frequencies.
SegmentedCorpus segment_corpus(const Corpus& corpus, const SegmenterDictionary& dict);

/// idf = ln(N / (1 + df)). Negative when df == N.
double inverse_document_frequency(std::size_t n_docs, std::size_t df);

struct TfIdf {
  double tf = 0;
  double idf = 0;
  double tfidf = 0;
};

/// TF-IDF of `term` in document `doc_index`. Throws if the document has no
/// terms or the index is out of range.
TfIdf tfidf(std::string_view term, std::size_t doc_index, const SegmentedCorpus& seg);

/// Convenience form; `doc` must be one of `corpus.documents` (matched by id).
TfIdf tfidf(std::string_view term, const Document& doc, const Corpus& corpus,
            const SegmenterDictionary& dict);

struct TermScore {
  std::string term;
  std::string pos;
  double tf_sum = 0;
  double idf = 0;
  double tfidf = 0;  // corpus-level aggregate
};

enum class ScoreAggregate { kSum, kMax };

const std::set<std::string>& default_allowed_pos();

struct MineOptions {
  std::set<std::string> allowed_pos = default_allowed_pos();
  std::size_t top_k = 20000;
  ScoreAggregate aggregate = ScoreAggregate::kSum;
};

/// Ranks terms by aggregated TF-IDF: descending score, ties by term in
/// code-point order. POS filtering happens before truncation to top_k.
std::vector<TermScore> mine_terms(const Corpus& corpus, const SegmenterDictionary& dict,
                                  const MineOptions& opts = {});

/// "term<TAB>pos<TAB>tfidf" rows.
std::string format_term_scores(const std::vector<TermScore>& scores);

namespace reference {

/// Single-threaded mine_terms over ordered maps. Kept for tests and benchmarks.
std::vector<TermScore> mine_terms(const Corpus& corpus, const SegmenterDictionary& dict,
                                  const MineOptions& opts = {});

}  // namespace reference
}  // namespace emolex
