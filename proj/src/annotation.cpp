#include "emolex/annotation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "emolex/reliability.hpp"
#include "json.hpp"

namespace emolex {

using nlohmann::ordered_json;
using json = nlohmann::json;

std::string_view to_string(TaskKind k) {
  return k == TaskKind::kEmotionAnnotation ? "emotion-annotation" : "translation-validation";
}

std::optional<TaskKind> parse_task_kind(std::string_view s) {
  if (s == "emotion-annotation" || s == "emotion") return TaskKind::kEmotionAnnotation;
  if (s == "translation-validation" || s == "translation") return TaskKind::kTranslationValidation;
  return std::nullopt;
}

std::string make_task_id(TaskKind kind, std::string_view word) {
  return (kind == TaskKind::kEmotionAnnotation ? "emo:" : "tr:") + std::string(word);
}

Task Task::translation(std::string source_word, std::string given) {
  Task t;
  t.id = make_task_id(TaskKind::kTranslationValidation, source_word);
  t.kind = TaskKind::kTranslationValidation;
  t.word = std::move(source_word);
  t.given_translation = std::move(given);
  return t;
}

Task Task::emotion(std::string word) {
  Task t;
  t.id = make_task_id(TaskKind::kEmotionAnnotation, word);
  t.kind = TaskKind::kEmotionAnnotation;
  t.word = std::move(word);
  return t;
}

namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string msg = "schema violation:";
  for (const auto& e : errors) msg += " " + e.field + ": " + e.message + ";";
  msg.pop_back();
  return msg;
}

json parse_object(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::vector<FieldError>{{"$", std::string("invalid JSON: ") + e.what()}});
  }
  if (!j.is_object()) throw SchemaError(std::vector<FieldError>{{"$", "expected a JSON object"}});
  return j;
}

std::string required_string(const json& j, const std::string& field, std::vector<FieldError>& errors,
                            const std::string& prefix = "") {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) {
    errors.push_back({prefix + field, "required non-empty string"});
    return {};
  }
  std::string s = it->get<std::string>();
  if (s.empty()) errors.push_back({prefix + field, "required non-empty string"});
  return s;
}

Response response_from_object(TaskKind kind, const json& p, const std::string& prefix) {
  std::vector<FieldError> errors;
  if (!p.is_object()) throw SchemaError(std::vector<FieldError>{{prefix.empty() ? "$" : prefix.substr(0, prefix.size() - 1), "expected an object"}});

  if (kind == TaskKind::kEmotionAnnotation) {
    static const std::set<std::string> kKeys = {"labels", "wrong_word", "better_expression"};
    for (const auto& [key, value] : p.items()) {
      if (!kKeys.contains(key)) errors.push_back({prefix + key, "unexpected field"});
    }
    EmotionResponse r;
    if (auto it = p.find("labels"); it == p.end() || !it->is_array()) {
      errors.push_back({prefix + "labels", "required array of emotion labels"});
    } else {
      for (std::size_t i = 0; i < it->size(); ++i) {
        const json& l = (*it)[i];
        const std::string field = prefix + "labels[" + std::to_string(i) + "]";
        if (!l.is_string()) {
          errors.push_back({field, "expected a string"});
        } else if (auto e = parse_emotion(l.get<std::string>())) {
          r.labels.insert(*e);
        } else {
          errors.push_back({field, "unknown label \"" + l.get<std::string>() + "\""});
        }
      }
    }
    if (auto it = p.find("wrong_word"); it != p.end()) {
      if (it->is_boolean()) {
        r.wrong_word = it->get<bool>();
      } else {
        errors.push_back({prefix + "wrong_word", "expected a boolean"});
      }
    }
    if (auto it = p.find("better_expression"); it != p.end() && !it->is_null()) {
      if (!it->is_string()) {
        errors.push_back({prefix + "better_expression", "expected a string or null"});
      } else if (!it->get<std::string>().empty()) {
        r.better_expression = it->get<std::string>();
      }
    }
    if (!errors.empty()) throw SchemaError(std::move(errors));
    return r;
  }

  for (const auto& [key, value] : p.items()) {
    if (key != "alternate_expressions") errors.push_back({prefix + key, "unexpected field"});
  }
  TranslationResponse r;
  if (auto it = p.find("alternate_expressions"); it == p.end() || !it->is_array()) {
    errors.push_back({prefix + "alternate_expressions", "required array of strings"});
  } else {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& s = (*it)[i];
      const std::string field = prefix + "alternate_expressions[" + std::to_string(i) + "]";
      if (!s.is_string() || s.get<std::string>().empty()) {
        errors.push_back({field, "expected a non-empty string"});
      } else if (std::find(r.alternate_expressions.begin(), r.alternate_expressions.end(),
                           s.get<std::string>()) == r.alternate_expressions.end()) {
        r.alternate_expressions.push_back(s.get<std::string>());
      }
    }
  }
  if (!errors.empty()) throw SchemaError(std::move(errors));
  return r;
}

ordered_json response_object(const Response& r) {
  ordered_json j;
  if (const auto* e = std::get_if<EmotionResponse>(&r)) {
    j["labels"] = e->labels.names();
    j["wrong_word"] = e->wrong_word;
    j["better_expression"] = e->better_expression ? ordered_json(*e->better_expression) : ordered_json(nullptr);
  } else {
    j["alternate_expressions"] = std::get<TranslationResponse>(r).alternate_expressions;
  }
  return j;
}

template <class T, class F>
std::vector<T> parse_jsonl(std::string_view text, const std::string& source, F parse_one) {
  std::vector<T> out;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(parse_one(lines[i]));
    } catch (const SchemaError& e) {
      throw ParseError(source, i + 1, e.what());
    }
  }
  return out;
}

}  // namespace

SchemaError::SchemaError(std::vector<FieldError> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

std::string task_to_json(const Task& t) {
  ordered_json j;
  j["id"] = t.id;
  j["kind"] = to_string(t.kind);
  if (t.kind == TaskKind::kEmotionAnnotation) {
    j["payload"] = {{"word", t.word}};
  } else {
    j["payload"] = {{"source_word", t.word}, {"given_translation", t.given_translation}};
  }
  return j.dump();
}

Task task_from_json(std::string_view json_text) {
  const json j = parse_object(json_text);
  std::vector<FieldError> errors;
  Task t;
  t.id = required_string(j, "id", errors);
  const std::string kind = required_string(j, "kind", errors);
  auto k = parse_task_kind(kind);
  if (!kind.empty() && !k) errors.push_back({"kind", "unknown task kind \"" + kind + "\""});
  auto p = j.find("payload");
  if (p == j.end() || !p->is_object()) {
    errors.push_back({"payload", "required object"});
  } else if (k) {
    t.kind = *k;
    if (*k == TaskKind::kEmotionAnnotation) {
      t.word = required_string(*p, "word", errors, "payload.");
    } else {
      t.word = required_string(*p, "source_word", errors, "payload.");
      t.given_translation = required_string(*p, "given_translation", errors, "payload.");
    }
  }
  if (!errors.empty()) throw SchemaError(std::move(errors));
  return t;
}

std::string record_to_json(const AnnotationRecord& r) {
  ordered_json j;
  j["annotator_id"] = r.annotator_id;
  j["task_id"] = r.task_id;
  j["kind"] = to_string(r.kind());
  j["response"] = response_object(r.response);
  return j.dump();
}

AnnotationRecord record_from_json(std::string_view json_text) {
  const json j = parse_object(json_text);
  std::vector<FieldError> errors;
  AnnotationRecord r;
  r.annotator_id = required_string(j, "annotator_id", errors);
  r.task_id = required_string(j, "task_id", errors);
  const std::string kind = required_string(j, "kind", errors);
  auto k = parse_task_kind(kind);
  if (!kind.empty() && !k) errors.push_back({"kind", "unknown task kind \"" + kind + "\""});
  auto resp = j.find("response");
  if (resp == j.end()) errors.push_back({"response", "required object"});
  if (!errors.empty()) throw SchemaError(std::move(errors));
  r.response = response_from_object(*k, *resp, "response.");
  return r;
}

Response response_from_json(TaskKind kind, std::string_view payload_json) {
  return response_from_object(kind, parse_object(payload_json), "");
}

std::string response_to_json(const Response& r) { return response_object(r).dump(); }

std::vector<Task> parse_tasks_jsonl(std::string_view text, const std::string& source) {
  auto tasks = parse_jsonl<Task>(text, source, [](const std::string& l) { return task_from_json(l); });
  std::unordered_set<std::string> ids;
  for (const Task& t : tasks) {
    if (!ids.insert(t.id).second) throw Error(source + ": duplicate task id \"" + t.id + "\"");
  }
  return tasks;
}

std::vector<Task> load_tasks(const std::filesystem::path& path) {
  return parse_tasks_jsonl(io::read_file(path), path.string());
}

std::string format_tasks_jsonl(const std::vector<Task>& tasks) {
  std::string out;
  for (const Task& t : tasks) out += task_to_json(t) + "\n";
  return out;
}

std::vector<AnnotationRecord> parse_records_jsonl(std::string_view text, const std::string& source) {
  return parse_jsonl<AnnotationRecord>(text, source,
                                       [](const std::string& l) { return record_from_json(l); });
}

std::vector<AnnotationRecord> load_records(const std::filesystem::path& path) {
  return parse_records_jsonl(io::read_file(path), path.string());
}

std::string format_records_jsonl(const std::vector<AnnotationRecord>& records) {
  std::string out;
  for (const AnnotationRecord& r : records) out += record_to_json(r) + "\n";
  return out;
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  // Rejection sampling on the top of the range keeps draws unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % bound;
  }
}

std::vector<std::vector<std::size_t>> portion_indices(std::size_t n, std::size_t k,
                                                      std::uint64_t seed) {
  if (k == 0) throw Error("make_portions: k must be positive");
  if (k > n) {
    throw Error("make_portions: k (" + std::to_string(k) + ") exceeds item count (" +
                std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng(seed);
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> portions(k);
  const std::size_t small = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const std::size_t size = small + (p < extra ? 1 : 0);
    portions[p].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return portions;
}

std::vector<std::size_t> sample_half_indices(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample_half: empty list");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng(seed);
  rng.shuffle(order);
  order.resize(n / 2);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<Assignment> build_assignments(
    std::size_t n_portions, const std::map<std::string, std::vector<std::string>>& groups) {
  std::unordered_set<std::string> seen;
  for (const auto& [group, members] : groups) {
    if (members.size() != n_portions) {
      throw Error("build_assignments: group " + group + " has " + std::to_string(members.size()) +
                  " annotators, expected " + std::to_string(n_portions));
    }
    for (const auto& a : members) {
      if (!seen.insert(a).second) throw Error("build_assignments: annotator " + a + " listed twice");
    }
  }
  std::vector<Assignment> out(n_portions);
  for (std::size_t i = 0; i < n_portions; ++i) {
    out[i].portion_index = i;
    for (const auto& [group, members] : groups) out[i].annotators[group] = members[i];
  }
  return out;
}

std::vector<ManifestEntry> make_manifest(const std::vector<Assignment>& assignments,
                                         const std::vector<std::vector<Task>>& portions) {
  std::vector<ManifestEntry> out;
  for (const Assignment& a : assignments) {
    if (a.portion_index >= portions.size()) throw Error("assignment references a missing portion");
    std::vector<std::string> ids;
    for (const Task& t : portions[a.portion_index]) ids.push_back(t.id);
    for (const auto& [group, annotator] : a.annotators) {
      out.push_back({a.portion_index, group, annotator, ids});
    }
  }
  return out;
}

std::string format_manifest(const std::vector<ManifestEntry>& manifest) {
  ordered_json arr = ordered_json::array();
  for (const ManifestEntry& e : manifest) {
    ordered_json j;
    j["portion_index"] = e.portion_index;
    j["group"] = e.group;
    j["annotator_id"] = e.annotator_id;
    j["task_ids"] = e.task_ids;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<ManifestEntry> parse_manifest(std::string_view json_text, const std::string& source) {
  json arr;
  try {
    arr = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(source + ": invalid JSON: " + e.what());
  }
  if (!arr.is_array()) throw Error(source + ": manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& j = arr[i];
    const std::string where = source + ": entry " + std::to_string(i) + ": ";
    if (!j.is_object() || !j.contains("portion_index") || !j["portion_index"].is_number_unsigned() ||
        !j.contains("group") || !j["group"].is_string() || !j.contains("annotator_id") ||
        !j["annotator_id"].is_string() || !j.contains("task_ids") || !j["task_ids"].is_array()) {
      throw Error(where + "needs portion_index, group, annotator_id, task_ids");
    }
    ManifestEntry e;
    e.portion_index = j["portion_index"].get<std::size_t>();
    e.group = j["group"].get<std::string>();
    e.annotator_id = j["annotator_id"].get<std::string>();
    for (const json& t : j["task_ids"]) {
      if (!t.is_string()) throw Error(where + "task_ids must be strings");
      e.task_ids.push_back(t.get<std::string>());
    }
    out.push_back(std::move(e));
  }
  return out;
}

MajorityResult aggregate_majority(std::span<const AnnotationRecord> records, std::size_t raters) {
  if (records.empty()) throw Error("aggregate_majority: no records");
  if (raters == 0 || records.size() > raters) {
    throw Error("aggregate_majority: " + std::to_string(records.size()) + " records for " +
                std::to_string(raters) + " raters");
  }
  MajorityResult r;
  std::unordered_set<std::string> seen;
  for (const AnnotationRecord& rec : records) {
    if (rec.task_id != records.front().task_id) {
      throw Error("aggregate_majority: records span tasks " + records.front().task_id + " and " + rec.task_id);
    }
    if (!seen.insert(rec.annotator_id).second) {
      throw Error("aggregate_majority: duplicate rater " + rec.annotator_id + " for " + rec.task_id);
    }
    const auto* e = std::get_if<EmotionResponse>(&rec.response);
    if (e == nullptr) throw Error("aggregate_majority: " + rec.task_id + " is not an emotion record");
    for (Emotion d : e->labels.to_vector()) ++r.votes[static_cast<std::size_t>(d)];
    r.wrong_word_votes += e->wrong_word ? 1 : 0;
  }
  for (std::size_t d = 0; d < kNumEmotions; ++d) {
    if (2 * r.votes[d] > raters) r.labels.insert(kAllEmotions[d]);
  }
  r.dropped = 2 * r.wrong_word_votes > raters;
  return r;
}

std::vector<AggregatedWord> aggregate_all(std::span<const AnnotationRecord> records,
                                          std::size_t raters) {
  std::map<std::string, std::vector<AnnotationRecord>> by_task;
  for (const AnnotationRecord& r : records) {
    if (r.kind() == TaskKind::kEmotionAnnotation) by_task[r.task_id].push_back(r);
  }
  std::vector<const std::pair<const std::string, std::vector<AnnotationRecord>>*> groups;
  for (const auto& g : by_task) groups.push_back(&g);

  std::vector<AggregatedWord> out(groups.size());
  std::vector<std::string> failures(groups.size());
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = {groups[i]->first, aggregate_majority(groups[i]->second, raters)};
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw Error(f);
  }
  return out;
}

TrioSelection select_annotator_trio(std::span<const AnnotationRecord> demo_records,
                                    std::span<const std::string> demo_task_ids) {
  // Latest emotion record per (annotator, task).
  std::map<std::pair<std::string, std::string>, const AnnotationRecord*> latest;
  for (const AnnotationRecord& r : demo_records) {
    if (r.kind() == TaskKind::kEmotionAnnotation) latest[{r.annotator_id, r.task_id}] = &r;
  }
  std::vector<std::string> tasks(demo_task_ids.begin(), demo_task_ids.end());
  std::set<std::string> candidate_set;
  if (tasks.empty()) {
    std::set<std::string> all;
    for (const auto& [key, rec] : latest) all.insert(key.second);
    tasks.assign(all.begin(), all.end());
  }
  for (const auto& [key, rec] : latest) candidate_set.insert(key.first);

  TrioSelection sel;
  std::vector<std::string> candidates;
  for (const auto& c : candidate_set) {
    std::size_t missing = 0;
    for (const auto& t : tasks) missing += latest.contains({c, t}) ? 0 : 1;
    if (missing == 0) {
      candidates.push_back(c);
    } else {
      sel.excluded.push_back(c);
      sel.warnings.push_back("candidate " + c + " excluded: missing " + std::to_string(missing) +
                             " of " + std::to_string(tasks.size()) + " demo words");
    }
  }
  if (candidates.size() < 3) {
    throw Error("select_annotator_trio: need at least 3 candidates with full demo coverage, have " +
                std::to_string(candidates.size()));
  }

  std::vector<AnnotationRecord> kept;
  for (const auto& [key, rec] : latest) {
    if (std::binary_search(candidates.begin(), candidates.end(), key.first)) kept.push_back(*rec);
  }
  const ReliabilityMatrix full = build_reliability_matrix(kept, tasks, candidates);

  std::vector<std::array<std::size_t, 3>> trios;
  const std::size_t c = candidates.size();
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j)
      for (std::size_t k = j + 1; k < c; ++k) trios.push_back({i, j, k});

  std::vector<std::optional<double>> alphas(trios.size());
  const auto n = static_cast<std::ptrdiff_t>(trios.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      alphas[t] = krippendorff_alpha(full.select_raters(trios[t])).coefficient;
    } catch (const Error&) {
      // Unscorable trio (degenerate or no pairable unit).
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < trios.size(); ++t) {
    if (!alphas[t]) continue;
    ++sel.trios_scored;
    if (!best || *alphas[t] > *alphas[*best]) best = t;
  }
  if (!best) throw DegenerateDataError("select_annotator_trio: no trio has scorable alpha");
  for (std::size_t m = 0; m < 3; ++m) sel.trio[m] = candidates[trios[*best][m]];
  sel.alpha = *alphas[*best];
  return sel;
}

}  // namespace emolex
