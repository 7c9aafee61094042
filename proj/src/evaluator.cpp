#include "emolex/evaluator.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "emolex/io.hpp"
#include "emolex/utf8.hpp"
#include "json.hpp"

namespace emolex {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view language_display_name(std::string_view tag) {
  if (tag == "en") return "English";
  if (tag == "zh") return "Mandarin";
  if (tag == "yue") return "Cantonese";
  throw Error("unknown language tag \"" + std::string(tag) + "\" (expected en, zh or yue)");
}

ParallelDataset parse_dataset(std::string_view jsonl, const std::string& source, std::string name,
                              std::vector<std::string> languages) {
  for (const auto& l : languages) language_display_name(l);
  ParallelDataset ds{std::move(name), std::move(languages), {}};
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(jsonl)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(source, line_no, "not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw ParseError(source, line_no, "missing string \"id\"");
    ParallelDoc doc;
    doc.id = j["id"].get<std::string>();
    if (!ids.insert(doc.id).second) throw ParseError(source, line_no, "duplicate document id \"" + doc.id + "\"");
    if (!j.contains("versions") || !j["versions"].is_object()) {
      throw ParseError(source, line_no, "document \"" + doc.id + "\" has no \"versions\" object");
    }
    for (const auto& [tag, text] : j["versions"].items()) {
      if (!text.is_string()) throw ParseError(source, line_no, "document \"" + doc.id + "\": version " + tag + " is not a string");
      doc.versions[tag] = text.get<std::string>();
    }
    for (const auto& tag : ds.languages) {
      if (!doc.versions.count(tag)) {
        throw ParseError(source, line_no, "document \"" + doc.id + "\" is missing the " + tag + " version");
      }
    }
    if (j.contains("gold")) doc.gold = j["gold"].dump();
    ds.docs.push_back(std::move(doc));
  }
  if (ds.docs.empty()) throw Error(source + ": dataset has no documents");
  return ds;
}

ParallelDataset load_dataset(const std::filesystem::path& path, std::vector<std::string> languages) {
  return parse_dataset(io::read_file(path), path.string(), path.stem().string(), std::move(languages));
}

ExtractionRun run_lexicon(const ParallelDataset& ds, const Extractor& ex, const std::string& lexicon_name,
                          std::string_view lang) {
  if (std::find(ds.languages.begin(), ds.languages.end(), lang) == ds.languages.end()) {
    throw Error("dataset " + ds.name + " has no " + std::string(lang) + " version");
  }
  ExtractionRun run{ds.name, lexicon_name, std::string(lang), {}, {}};
  std::vector<std::string> texts;
  for (const auto& d : ds.docs) {
    run.doc_ids.push_back(d.id);
    texts.push_back(d.versions.at(std::string(lang)));
  }
  for (auto& p : extract_all(ex, texts)) run.presence.push_back(p.presence);
  return run;
}

ExtractionRun run_lexicon(const ParallelDataset& ds, const Lexicon& lex, std::string_view lang, MatchMode mode) {
  return run_lexicon(ds, Extractor(lex, mode), lex.name(), lang);
}

namespace {

// Candidate presence sets reordered to the baseline's document order.
std::vector<EmotionSet> aligned(const ExtractionRun& candidate, const ExtractionRun& baseline) {
  if (candidate.doc_ids.size() != baseline.doc_ids.size()) {
    throw Error("agreement: runs cover different documents (" + std::to_string(candidate.doc_ids.size()) + " vs " +
                std::to_string(baseline.doc_ids.size()) + ")");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < candidate.doc_ids.size(); ++i) index[candidate.doc_ids[i]] = i;
  std::vector<EmotionSet> out;
  for (const auto& id : baseline.doc_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw Error("agreement: document \"" + id + "\" is missing from the candidate run");
    out.push_back(candidate.presence[it->second]);
  }
  return out;
}

}  // namespace

AgreementReport agreement(const ExtractionRun& candidate, const ExtractionRun& baseline) {
  const auto cand = aligned(candidate, baseline);
  std::vector<int> a, b;
  for (std::size_t d = 0; d < cand.size(); ++d) {
    for (Emotion e : kAllEmotions) {
      a.push_back(cand[d].contains(e) ? 1 : 0);
      b.push_back(baseline.presence[d].contains(e) ? 1 : 0);
    }
  }
  return cohens_kappa(a, b);
}

std::array<std::optional<double>, kNumEmotions> per_dimension_agreement(const ExtractionRun& candidate,
                                                                         const ExtractionRun& baseline) {
  const auto cand = aligned(candidate, baseline);
  std::array<std::optional<double>, kNumEmotions> out;
  for (Emotion e : kAllEmotions) {
    std::vector<int> a, b;
    for (std::size_t d = 0; d < cand.size(); ++d) {
      a.push_back(cand[d].contains(e) ? 1 : 0);
      b.push_back(baseline.presence[d].contains(e) ? 1 : 0);
    }
    try {
      out[static_cast<std::size_t>(e)] = cohens_kappa(a, b).coefficient;
    } catch (const DegenerateDataError&) {
    }
  }
  return out;
}

std::string LexiconSpec::label() const {
  return name + " (" + std::string(language_display_name(language)) + ")";
}

double relative_change(double candidate, double reference) {
  if (reference == 0) return std::numeric_limits<double>::quiet_NaN();
  return (candidate - reference) / reference;
}

std::size_t find_row(std::span<const LexiconSpec> lexicons, const std::string& key) {
  std::vector<std::size_t> by_name;
  for (std::size_t i = 0; i < lexicons.size(); ++i) {
    if (lexicons[i].label() == key) return i;
    if (lexicons[i].name == key) by_name.push_back(i);
  }
  if (by_name.size() == 1) return by_name[0];
  if (by_name.empty()) throw Error("no lexicon row named \"" + key + "\"");
  throw Error("lexicon name \"" + key + "\" is ambiguous; use the row label, e.g. \"" +
              lexicons[by_name[0]].label() + "\"");
}

RelativeChange compare_rows(const EvaluationReport& r, std::size_t candidate, std::size_t reference) {
  if (candidate >= r.kappa.size() || reference >= r.kappa.size()) throw Error("compare_rows: row out of range");
  RelativeChange c{r.lexicons[candidate], r.lexicons[reference], {}};
  for (std::size_t d = 0; d < r.datasets.size(); ++d) {
    c.values.push_back(relative_change(r.kappa[candidate][d], r.kappa[reference][d]));
  }
  return c;
}

EvaluationReport evaluate_matrix(std::span<const ParallelDataset> datasets, std::span<const LexiconSpec> lexicons,
                                 const LexiconSpec& baseline) {
  if (datasets.empty()) throw Error("evaluate: no datasets");
  if (lexicons.empty()) throw Error("evaluate: no lexicons");
  EvaluationReport r;
  r.baseline = baseline.label();
  for (const auto& ds : datasets) {
    r.datasets.push_back(ds.name);
    r.doc_counts.push_back(ds.docs.size());
  }

  const Extractor base_ex(baseline.lexicon, baseline.mode);
  std::vector<ExtractionRun> base_runs;
  for (const auto& ds : datasets) {
    try {
      base_runs.push_back(run_lexicon(ds, base_ex, baseline.name, baseline.language));
    } catch (const Error& e) {
      throw Error("evaluate: baseline " + r.baseline + " on " + ds.name + ": " + e.what());
    }
  }

  for (const auto& spec : lexicons) {
    std::optional<Extractor> ex;
    try {
      r.lexicons.push_back(spec.label());
      ex.emplace(spec.lexicon, spec.mode);
    } catch (const Error& e) {
      throw Error("evaluate: lexicon " + spec.name + ": " + e.what());
    }
    if (std::count(r.lexicons.begin(), r.lexicons.end(), r.lexicons.back()) > 1) {
      throw Error("evaluate: lexicon row \"" + r.lexicons.back() + "\" appears twice");
    }
    auto& row = r.kappa.emplace_back();
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      try {
        row.push_back(agreement(run_lexicon(datasets[d], *ex, spec.name, spec.language), base_runs[d]).coefficient);
      } catch (const Error& e) {
        throw Error("evaluate: cell (" + spec.label() + ", " + datasets[d].name + "): " + e.what());
      }
    }
  }

  for (std::size_t i = 0; i < lexicons.size(); ++i) {
    if (!lexicons[i].reference) continue;
    std::size_t ref;
    try {
      ref = find_row(lexicons, *lexicons[i].reference);
    } catch (const Error& e) {
      throw Error("evaluate: reference of " + r.lexicons[i] + ": " + e.what());
    }
    r.changes.push_back(compare_rows(r, i, ref));
  }
  return r;
}

namespace {

ordered_json number_or_null(double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); }

std::string percent(double v) {
  if (std::isnan(v)) return "n/a";
  std::string s = io::format_fixed(v * 100.0, 1);
  if (s[0] != '-') s = "+" + s;
  return s + "%";
}

std::string pad(const std::string& s, std::size_t width, bool right) {
  // Width counts characters, not bytes.
  const std::size_t len = utf8::length(s);
  if (len >= width) return s;
  const std::string fill(width - len, ' ');
  return right ? fill + s : s + fill;
}

}  // namespace

std::string report_to_json(const EvaluationReport& r) {
  ordered_json j;
  j["baseline"] = r.baseline;
  j["dimensions"] = [] {
    std::vector<std::string> v;
    for (auto n : kEmotionNames) v.emplace_back(n);
    return v;
  }();
  j["datasets"] = ordered_json::array();
  for (std::size_t d = 0; d < r.datasets.size(); ++d) {
    j["datasets"].push_back({{"name", r.datasets[d]}, {"documents", r.doc_counts[d]}});
  }
  j["kappa"] = ordered_json::array();
  for (std::size_t l = 0; l < r.lexicons.size(); ++l) {
    ordered_json row = {{"lexicon", r.lexicons[l]}, {"values", ordered_json::object()}};
    for (std::size_t d = 0; d < r.datasets.size(); ++d) row["values"][r.datasets[d]] = number_or_null(r.kappa[l][d]);
    j["kappa"].push_back(row);
  }
  j["relative_change"] = ordered_json::array();
  for (const auto& c : r.changes) {
    ordered_json row = {{"candidate", c.candidate}, {"reference", c.reference}, {"values", ordered_json::object()}};
    for (std::size_t d = 0; d < r.datasets.size(); ++d) row["values"][r.datasets[d]] = number_or_null(c.values[d]);
    j["relative_change"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvaluationReport& r) {
  std::size_t label_w = std::string("Lexicon").size();
  for (const auto& l : r.lexicons) label_w = std::max(label_w, utf8::length(l));
  for (const auto& c : r.changes) label_w = std::max(label_w, utf8::length(c.candidate + " vs " + c.reference));
  std::vector<std::size_t> col_w;
  for (const auto& d : r.datasets) col_w.push_back(std::max<std::size_t>(8, utf8::length(d)));

  std::string out = "Cohen's kappa against " + r.baseline + "\n\n";
  auto header = [&](const std::string& first) {
    std::string line = pad(first, label_w, false);
    for (std::size_t d = 0; d < r.datasets.size(); ++d) line += "  " + pad(r.datasets[d], col_w[d], true);
    return line + "\n";
  };
  out += header("Lexicon");
  for (std::size_t l = 0; l < r.lexicons.size(); ++l) {
    std::string line = pad(r.lexicons[l], label_w, false);
    for (std::size_t d = 0; d < r.datasets.size(); ++d) line += "  " + pad(io::format_fixed(r.kappa[l][d], 3), col_w[d], true);
    out += line + "\n";
  }
  if (!r.changes.empty()) {
    out += "\nRelative change\n";
    for (const auto& c : r.changes) {
      std::string line = pad(c.candidate + " vs " + c.reference, label_w, false);
      for (std::size_t d = 0; d < r.datasets.size(); ++d) line += "  " + pad(percent(c.values[d]), col_w[d], true);
      out += line + "\n";
    }
  }
  return out;
}

namespace {

LexiconSpec spec_from_json(const json& j, const std::filesystem::path& dir, const std::string& source) {
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw Error(source + ": lexicon entry needs string \"" + key + "\"");
    return j[key].get<std::string>();
  };
  LexiconSpec s;
  s.name = str("name");
  auto path = std::filesystem::path(str("file"));
  if (path.is_relative()) path = dir / path;
  s.lexicon = parse_lexicon(path);
  s.lexicon.set_name(s.name);
  s.language = str("language");
  language_display_name(s.language);
  s.mode = parse_match_mode(str("mode"));
  if (j.contains("reference") && !j["reference"].is_null()) s.reference = str("reference");
  return s;
}

}  // namespace

LexiconManifest load_lexicon_manifest(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "lexicons.json" : path;
  const std::string source = file.string();
  const json j = json::parse(io::read_file(file), nullptr, false);
  if (j.is_discarded()) throw Error(source + ": invalid JSON");
  LexiconManifest m;
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("lexicons")) throw Error(source + ": expected a \"lexicons\" array");
    list = &j["lexicons"];
    if (j.contains("baseline")) {
      if (!j["baseline"].is_string()) throw Error(source + ": \"baseline\" must be a lexicon name");
      m.baseline = j["baseline"].get<std::string>();
    }
  }
  if (!list->is_array() || list->empty()) throw Error(source + ": expected a non-empty array of lexicons");
  std::set<std::string> labels;
  for (const auto& e : *list) {
    m.lexicons.push_back(spec_from_json(e, file.parent_path(), source));
    if (!labels.insert(m.lexicons.back().label()).second) {
      throw Error(source + ": duplicate lexicon " + m.lexicons.back().label());
    }
  }
  return m;
}

std::pair<LexiconSpec, std::vector<LexiconSpec>> LexiconManifest::split(const std::string& baseline_name) const {
  std::size_t at;
  try {
    at = find_row(lexicons, baseline_name);
  } catch (const Error& e) {
    throw Error(std::string("baseline: ") + e.what());
  }
  std::vector<LexiconSpec> rows;
  for (std::size_t i = 0; i < lexicons.size(); ++i) {
    if (i != at) rows.push_back(lexicons[i]);
  }
  return {lexicons[at], rows};
}

std::vector<ParallelDataset> load_datasets(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return {load_dataset(path)};
  std::vector<std::filesystem::path> files;
  const auto listing = path / "datasets.json";
  if (std::filesystem::exists(listing)) {
    const json j = json::parse(io::read_file(listing), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw Error(listing.string() + ": expected a JSON array of file names");
    for (const auto& f : j) {
      if (!f.is_string()) throw Error(listing.string() + ": expected a JSON array of file names");
      files.push_back(path / f.get<std::string>());
    }
  } else {
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw Error(path.string() + ": no datasets found");
  std::vector<ParallelDataset> out;
  for (const auto& f : files) out.push_back(load_dataset(f));
  return out;
}

LexiconSpec parse_lexicon_spec(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error("lexicon spec \"" + std::string(arg) + "\" should look like name=path:lang:mode");
  }
  LexiconSpec s;
  s.name = std::string(arg.substr(0, eq));
  std::string rest(arg.substr(eq + 1));
  auto take_last = [&]() {
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw Error("lexicon spec \"" + std::string(arg) + "\" should look like name=path:lang:mode");
    }
    std::string field = rest.substr(colon + 1);
    rest.resize(colon);
    return field;
  };
  s.mode = parse_match_mode(take_last());
  s.language = take_last();
  language_display_name(s.language);
  s.lexicon = parse_lexicon(rest);
  s.lexicon.set_name(s.name);
  return s;
}

}  // namespace emolex
