#include "emolex/tfidf.hpp"

#include <algorithm>
#include <cmath>

#include "emolex/io.hpp"

namespace emolex {

namespace {

DocumentTerms count_terms(const Document& doc, const SegmenterDictionary& dict,
                          std::unordered_map<std::string, std::string>& pos_out) {
  DocumentTerms dt;
  for (Token& t : segment_text(doc.text, dict)) {
    if (!is_term(t)) continue;
    ++dt.total;
    auto [it, inserted] = dt.counts.try_emplace(t.surface, 0);
    ++it->second;
    if (inserted) pos_out.try_emplace(std::move(t.surface), std::move(t.pos));
  }
  return dt;
}

bool rank_before(const TermScore& a, const TermScore& b) {
  if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
  return a.term < b.term;
}

std::vector<TermScore> finish_ranking(std::vector<TermScore> scores, const MineOptions& opts) {
  std::erase_if(scores, [&](const TermScore& s) { return !opts.allowed_pos.contains(s.pos); });
  std::sort(scores.begin(), scores.end(), rank_before);
  if (scores.size() > opts.top_k) scores.resize(opts.top_k);
  return scores;
}

void check_options(const Corpus& corpus, const MineOptions& opts) {
  if (corpus.empty()) throw Error("mine_terms: corpus is empty");
  if (opts.top_k == 0) throw Error("mine_terms: top_k must be at least 1");
}

}  // namespace

SegmentedCorpus segment_corpus(const Corpus& corpus, const SegmenterDictionary& dict) {
  SegmentedCorpus seg;
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  seg.docs.resize(corpus.size());
  std::vector<std::unordered_map<std::string, std::string>> pos_parts(corpus.size());

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    seg.docs[i] = count_terms(corpus.documents[i], dict, pos_parts[i]);
  }

  // POS is a function of the surface (dictionary lookup), so merge order
  // cannot change the result; df is a plain count.
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (auto& [term, pos] : pos_parts[i]) seg.pos.try_emplace(term, std::move(pos));
    for (const auto& entry : seg.docs[i].counts) ++seg.df[entry.first];
  }
  return seg;
}

double inverse_document_frequency(std::size_t n_docs, std::size_t df) {
  return std::log(static_cast<double>(n_docs) / (1.0 + static_cast<double>(df)));
}

TfIdf tfidf(std::string_view term, std::size_t doc_index, const SegmentedCorpus& seg) {
  if (doc_index >= seg.docs.size()) throw Error("tfidf: document not in corpus");
  const DocumentTerms& dt = seg.docs[doc_index];
  if (dt.total == 0) throw Error("tfidf: document has no terms, TF is undefined");
  TfIdf r;
  const std::string key(term);
  auto c = dt.counts.find(key);
  const std::size_t count = c == dt.counts.end() ? 0 : c->second;
  auto d = seg.df.find(key);
  const std::size_t df = d == seg.df.end() ? 0 : d->second;
  r.tf = static_cast<double>(count) / static_cast<double>(dt.total);
  r.idf = inverse_document_frequency(seg.docs.size(), df);
  r.tfidf = r.tf * r.idf;
  return r;
}

TfIdf tfidf(std::string_view term, const Document& doc, const Corpus& corpus,
            const SegmenterDictionary& dict) {
  if (corpus.empty()) throw Error("tfidf: corpus is empty");
  auto it = std::find_if(corpus.documents.begin(), corpus.documents.end(),
                         [&](const Document& d) { return d.id == doc.id; });
  if (it == corpus.documents.end()) throw Error("tfidf: document \"" + doc.id + "\" not in corpus");
  return tfidf(term, static_cast<std::size_t>(it - corpus.documents.begin()),
               segment_corpus(corpus, dict));
}

const std::set<std::string>& default_allowed_pos() {
  static const std::set<std::string> kDefault = {"a", "ad", "ag", "an", "b", "g", "h",
                                                 "i", "j",  "l",  "q",  "v", "vn", "z"};
  return kDefault;
}

std::vector<TermScore> mine_terms(const Corpus& corpus, const SegmenterDictionary& dict,
                                  const MineOptions& opts) {
  check_options(corpus, opts);
  const SegmentedCorpus seg = segment_corpus(corpus, dict);
  const std::size_t n = corpus.size();

  std::unordered_map<std::string, TermScore> by_term;
  by_term.reserve(seg.df.size());
  for (const auto& [term, df] : seg.df) {
    TermScore s;
    s.term = term;
    s.pos = seg.pos.at(term);
    s.idf = inverse_document_frequency(n, df);
    by_term.emplace(term, std::move(s));
  }

  // Per term, documents are visited in corpus order, so the floating-point
  // accumulation order is fixed.
  std::unordered_map<std::string, bool> seen;
  for (const DocumentTerms& dt : seg.docs) {
    if (dt.total == 0) continue;
    for (const auto& [term, count] : dt.counts) {
      TermScore& s = by_term.at(term);
      const double tf = static_cast<double>(count) / static_cast<double>(dt.total);
      const double v = tf * s.idf;
      s.tf_sum += tf;
      if (opts.aggregate == ScoreAggregate::kSum) {
        s.tfidf += v;
      } else {
        auto [it, first] = seen.try_emplace(term, true);
        s.tfidf = first ? v : std::max(s.tfidf, v);
      }
    }
  }

  std::vector<TermScore> scores;
  scores.reserve(by_term.size());
  for (auto& [term, s] : by_term) scores.push_back(std::move(s));
  return finish_ranking(std::move(scores), opts);
}

std::string format_term_scores(const std::vector<TermScore>& scores) {
  std::string out;
  for (const TermScore& s : scores) {
    out += s.term;
    out += '\t';
    out += s.pos;
    out += '\t';
    out += io::format_double(s.tfidf);
    out += '\n';
  }
  return out;
}

namespace reference {

std::vector<TermScore> mine_terms(const Corpus& corpus, const SegmenterDictionary& dict,
                                  const MineOptions& opts) {
  check_options(corpus, opts);
  std::vector<std::map<std::string, std::size_t>> counts(corpus.size());
  std::vector<std::size_t> totals(corpus.size(), 0);
  std::map<std::string, std::string> pos;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const Token& t : segment_text(corpus.documents[d].text, dict)) {
      if (!is_term(t)) continue;
      ++counts[d][t.surface];
      ++totals[d];
      pos.emplace(t.surface, t.pos);
    }
  }

  std::vector<TermScore> scores;
  for (const auto& [term, tag] : pos) {
    std::size_t df = 0;
    for (const auto& c : counts) df += c.contains(term) ? 1 : 0;
    TermScore s;
    s.term = term;
    s.pos = tag;
    s.idf = std::log(static_cast<double>(corpus.size()) / (1.0 + static_cast<double>(df)));
    bool first = true;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      auto it = counts[d].find(term);
      if (it == counts[d].end()) continue;
      const double tf = static_cast<double>(it->second) / static_cast<double>(totals[d]);
      s.tf_sum += tf;
      if (opts.aggregate == ScoreAggregate::kSum) {
        s.tfidf += tf * s.idf;
      } else {
        s.tfidf = first ? tf * s.idf : std::max(s.tfidf, tf * s.idf);
      }
      first = false;
    }
    scores.push_back(std::move(s));
  }
  return finish_ranking(std::move(scores), opts);
}

}  // namespace reference
}  // namespace emolex
