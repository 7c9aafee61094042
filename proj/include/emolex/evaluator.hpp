#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <string_view>
#include <vector>

#include "emolex/emotion.hpp"
#include "emolex/extractor.hpp"
#include "emolex/lexicon.hpp"
#include "emolex/reliability.hpp"

namespace emolex {

/// Language tags a dataset version may carry.
inline constexpr std::string_view kLanguageTags[] = {"en", "zh", "yue"};

/// "English", "Mandarin", "Cantonese".
std::string_view language_display_name(std::string_view tag);

struct ParallelDoc {
  std::string id;
  std::map<std::string, std::string> versions;  // language tag -> text
  std::optional<std::string> gold;               // raw JSON, carried but unused
};

struct ParallelDataset {
  std::string name;
  std::vector<std::string> languages;  // declared versions, every doc has all
  std::vector<ParallelDoc> docs;
};

/// Lines of {"id", "versions": {"en": ..., "zh": ..., "yue": ...}, "gold"?}.
/// `languages` are the versions every doc must carry; the default is all
/// three tags.
ParallelDataset parse_dataset(std::string_view jsonl, const std::string& source, std::string name,
                              std::vector<std::string> languages = {"en", "zh", "yue"});
ParallelDataset load_dataset(const std::filesystem::path& path,
                             std::vector<std::string> languages = {"en", "zh", "yue"});

struct ExtractionRun {
  std::string dataset;
  std::string lexicon;
  std::string language;
  std::vector<std::string> doc_ids;
  std::vector<EmotionSet> presence;  // parallel to doc_ids
};

ExtractionRun run_lexicon(const ParallelDataset& ds, const Lexicon& lex, std::string_view lang, MatchMode mode);
ExtractionRun run_lexicon(const ParallelDataset& ds, const Extractor& ex, const std::string& lexicon_name,
                          std::string_view lang);

/// Cohen's kappa over the pooled (doc x dimension) presence indicators.
/// Documents are paired by id.
AgreementReport agreement(const ExtractionRun& candidate, const ExtractionRun& baseline);

/// Non-canonical diagnostic: kappa per dimension; nullopt where degenerate.
std::array<std::optional<double>, kNumEmotions> per_dimension_agreement(const ExtractionRun& candidate,
                                                                         const ExtractionRun& baseline);

struct LexiconSpec {
  std::string name;
  Lexicon lexicon;
  std::string language;
  MatchMode mode = MatchMode::kSubstring;
  std::optional<std::string> reference;  // row label, or a name that picks one row

  /// Table row label, e.g. "EmoLex-Cantonese (Cantonese)".
  std::string label() const;
};

/// (candidate - reference) / reference; NaN when reference is zero.
double relative_change(double candidate, double reference);

struct RelativeChange {
  std::string candidate;
  std::string reference;
  std::vector<double> values;  // per dataset
};

struct EvaluationReport {
  std::string baseline;  // label of the baseline run
  std::vector<std::string> datasets;
  std::vector<std::size_t> doc_counts;
  std::vector<std::string> lexicons;        // row labels
  std::vector<std::vector<double>> kappa;   // [lexicon][dataset]
  std::vector<RelativeChange> changes;
};

/// Index of the row whose label is `key`, else of the only row named `key`.
std::size_t find_row(std::span<const LexiconSpec> lexicons, const std::string& key);

/// Per-dataset relative change of one grid row against another.
RelativeChange compare_rows(const EvaluationReport& r, std::size_t candidate, std::size_t reference);

EvaluationReport evaluate_matrix(std::span<const ParallelDataset> datasets, std::span<const LexiconSpec> lexicons,
                                 const LexiconSpec& baseline);

std::string report_to_json(const EvaluationReport& r);
std::string report_to_table(const EvaluationReport& r);

/// Reads a lexicon manifest, either a JSON array of specs or
///   {"baseline": "<name>", "lexicons": [spec, ...]}
/// with spec = {"name", "file", "language", "mode", "reference"?}. Files are
/// relative to the manifest's directory. A directory argument means its
/// lexicons.json.
struct LexiconManifest {
  std::vector<LexiconSpec> lexicons;
  std::optional<std::string> baseline;

  /// Splits off the baseline (label or unique name); the rest become the
  /// table rows.
  std::pair<LexiconSpec, std::vector<LexiconSpec>> split(const std::string& baseline_name) const;
};
LexiconManifest load_lexicon_manifest(const std::filesystem::path& path);

/// A dataset directory lists its files in datasets.json (a JSON array of
/// file names, giving column order); without it, every *.jsonl in name order.
std::vector<ParallelDataset> load_datasets(const std::filesystem::path& path);

/// "name=path:lang:mode" as used on the command line.
LexiconSpec parse_lexicon_spec(std::string_view arg);

}  // namespace emolex
