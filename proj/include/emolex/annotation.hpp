#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emolex/emotion.hpp"
#include "emolex/io.hpp"

namespace emolex {

enum class TaskKind { kTranslationValidation, kEmotionAnnotation };

std::string_view to_string(TaskKind k);
std::optional<TaskKind> parse_task_kind(std::string_view s);

/// Task ids derive from the word so that LLM and human records for the same
/// word share a key: "tr:<source word>" and "emo:<word>".
std::string make_task_id(TaskKind kind, std::string_view word);

struct Task {
  std::string id;
  TaskKind kind = TaskKind::kEmotionAnnotation;
  std::string word;               // source word or word to annotate
  std::string given_translation;  // translation validation only

  static Task translation(std::string source_word, std::string given);
  static Task emotion(std::string word);

  bool operator==(const Task&) const = default;
};

struct TranslationResponse {
  std::vector<std::string> alternate_expressions;

  bool operator==(const TranslationResponse&) const = default;
};

struct EmotionResponse {
  EmotionSet labels;
  bool wrong_word = false;
  std::optional<std::string> better_expression;

  bool operator==(const EmotionResponse&) const = default;
};

using Response = std::variant<TranslationResponse, EmotionResponse>;

struct AnnotationRecord {
  std::string annotator_id;
  std::string task_id;
  Response response;

  TaskKind kind() const {
    return std::holds_alternative<EmotionResponse>(response) ? TaskKind::kEmotionAnnotation
                                                             : TaskKind::kTranslationValidation;
  }
  bool operator==(const AnnotationRecord&) const = default;
};

/// Field-level schema failure, e.g. {"labels[1]", "unknown label \"happiness\""}.
struct FieldError {
  std::string field;
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

// JSON text forms. Parsers throw SchemaError / ParseError.
std::string task_to_json(const Task& t);
Task task_from_json(std::string_view json_text);
std::string record_to_json(const AnnotationRecord& r);
AnnotationRecord record_from_json(std::string_view json_text);

/// Validates a submitted payload object against the schema for `kind`.
Response response_from_json(TaskKind kind, std::string_view payload_json);
std::string response_to_json(const Response& r);

std::vector<Task> parse_tasks_jsonl(std::string_view text, const std::string& source);
std::vector<Task> load_tasks(const std::filesystem::path& path);
std::string format_tasks_jsonl(const std::vector<Task>& tasks);

std::vector<AnnotationRecord> parse_records_jsonl(std::string_view text, const std::string& source);
std::vector<AnnotationRecord> load_records(const std::filesystem::path& path);
std::string format_records_jsonl(const std::vector<AnnotationRecord>& records);

/// Seeded generator with a fixed bounded-draw rule, so shuffles reproduce
/// across standard library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Index form of make_portions: shuffle 0..n-1, then the first (n mod k)
/// portions get ceil(n/k) items and the rest floor(n/k).
std::vector<std::vector<std::size_t>> portion_indices(std::size_t n, std::size_t k,
                                                      std::uint64_t seed);

template <class T>
std::vector<std::vector<T>> make_portions(const std::vector<T>& items, std::size_t k,
                                          std::uint64_t seed) {
  std::vector<std::vector<T>> out;
  for (const auto& idx : portion_indices(items.size(), k, seed)) {
    auto& p = out.emplace_back();
    p.reserve(idx.size());
    for (std::size_t i : idx) p.push_back(items[i]);
  }
  return out;
}

/// floor(n/2) distinct indices, ascending.
std::vector<std::size_t> sample_half_indices(std::size_t n, std::uint64_t seed);

template <class T>
std::vector<T> sample_half(const std::vector<T>& items, std::uint64_t seed) {
  std::vector<T> out;
  for (std::size_t i : sample_half_indices(items.size(), seed)) out.push_back(items[i]);
  return out;
}

struct Assignment {
  std::size_t portion_index = 0;
  std::map<std::string, std::string> annotators;  // group -> annotator id

  bool operator==(const Assignment&) const = default;
};

/// Portion i goes to the i-th annotator of every group.
std::vector<Assignment> build_assignments(
    std::size_t n_portions, const std::map<std::string, std::vector<std::string>>& groups);

/// One row of the assignment manifest.
struct ManifestEntry {
  std::size_t portion_index = 0;
  std::string group;
  std::string annotator_id;
  std::vector<std::string> task_ids;

  bool operator==(const ManifestEntry&) const = default;
};

std::vector<ManifestEntry> make_manifest(const std::vector<Assignment>& assignments,
                                         const std::vector<std::vector<Task>>& portions);
std::string format_manifest(const std::vector<ManifestEntry>& manifest);
std::vector<ManifestEntry> parse_manifest(std::string_view json_text, const std::string& source);

struct MajorityResult {
  EmotionSet labels;
  bool dropped = false;
  std::array<std::size_t, kNumEmotions> votes{};
  std::size_t wrong_word_votes = 0;
};

/// Strict majority over k raters: a label survives iff chosen by more than
/// k/2 raters; the word is dropped iff more than k/2 flag it as wrong.
MajorityResult aggregate_majority(std::span<const AnnotationRecord> records, std::size_t raters);

struct AggregatedWord {
  std::string task_id;
  MajorityResult result;
};

/// Groups emotion records by task id and aggregates each group. Output is in
/// task-id order.
std::vector<AggregatedWord> aggregate_all(std::span<const AnnotationRecord> records,
                                          std::size_t raters);

struct TrioSelection {
  std::array<std::string, 3> trio;
  double alpha = 0;
  std::vector<std::string> excluded;  // candidates without full demo coverage
  std::vector<std::string> warnings;
  std::size_t trios_scored = 0;
};

/// Scores every 3-subset of candidates with alpha on their binarized demo
/// annotations and returns the best. Ties go to the smallest id triple.
/// Later records for the same (annotator, task) replace earlier ones.
TrioSelection select_annotator_trio(std::span<const AnnotationRecord> demo_records,
                                    std::span<const std::string> demo_task_ids = {});

}  // namespace emolex
