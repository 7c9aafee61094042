#include "emolex/cli.hpp"

#include <csignal>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "emolex/annotation.hpp"
#include "emolex/corpus.hpp"
#include "emolex/evaluator.hpp"
#include "emolex/extractor.hpp"
#include "emolex/io.hpp"
#include "emolex/lexicon.hpp"
#include "emolex/llm.hpp"
#include "emolex/reliability.hpp"
#include "emolex/service.hpp"
#include "emolex/tfidf.hpp"
#include "json.hpp"

namespace emolex::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  for (auto part : io::split(s, sep)) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

/// One word per line; for TSV input the first column. Blank lines skipped,
/// duplicates keep their first position.
std::vector<std::string> read_word_list(const std::string& path) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto line : io::split_lines(io::read_file(path))) {
    const auto tab = line.find('\t');
    std::string w(line.substr(0, tab));
    while (!w.empty() && (w.back() == ' ' || w.back() == '\r')) w.pop_back();
    if (w.empty()) continue;
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string word_of(const std::string& task_id) {
  const auto colon = task_id.find(':');
  return colon == std::string::npos ? task_id : task_id.substr(colon + 1);
}

std::string share(std::size_t part, std::size_t whole) {
  if (whole == 0) return "n/a";
  return io::format_fixed(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1) + "%";
}

/// Output goes to a file atomically, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    io::write_file_atomic(path, content);
  }
}

/// Latest record per (annotator, task), in first-seen order.
std::vector<AnnotationRecord> load_record_files(const std::vector<std::string>& paths) {
  std::vector<AnnotationRecord> out;
  std::map<std::pair<std::string, std::string>, std::size_t> at;
  for (const auto& p : paths) {
    for (auto& r : load_records(p)) {
      auto key = std::make_pair(r.annotator_id, r.task_id);
      if (auto it = at.find(key); it != at.end()) {
        out[it->second] = std::move(r);
      } else {
        at.emplace(std::move(key), out.size());
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

void log_config(const std::string& stage, const CLI::App& sub, std::ostream& err) {
  ordered_json cfg = ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "h") continue;
    const auto& results = opt->results();
    if (!results.empty()) {
      cfg[name] = results.size() == 1 ? ordered_json(results[0]) : ordered_json(results);
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  err << "emolex " << stage << ": config " << cfg.dump() << "\n";
}

/// Splices values from a JSON config file in as command-line flags, unless
/// the flag was given explicitly. Keys are flag names without dashes, either
/// at top level or under a section named after the subcommand.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file");
    path = *(it + 1);
    args.erase(it, it + 2);
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  const json cfg = json::parse(io::read_file(path), nullptr, false);
  if (cfg.is_discarded() || !cfg.is_object()) throw Error(path + ": config must be a JSON object");
  if (args.empty()) return args;
  const std::string sub = args[0];

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> extra;
  auto add = [&](const std::string& key, const json& v) {
    if (given(key)) return;
    if (v.is_boolean()) {
      if (v.get<bool>()) extra.push_back("--" + key);
    } else if (v.is_array()) {
      extra.push_back("--" + key);
      for (const auto& e : v) extra.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    } else {
      extra.push_back("--" + key);
      extra.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  };
  for (const auto& [k, v] : cfg.items()) {
    if (!v.is_object()) add(k, v);
  }
  if (cfg.contains(sub) && cfg[sub].is_object()) {
    for (const auto& [k, v] : cfg[sub].items()) add(k, v);
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

struct Options {
  // mine-terms
  std::string corpus, dict, pos, aggregate = "sum";
  std::size_t top_k = 20000;
  // shared
  std::string out, kind = "emotion", name;
  std::uint64_t seed = 0;
  // lexicon-stats
  std::string lexicon, base, tmap, format = "table";
  // make-tasks
  std::string words, from_records, pairs, groups, annotators, manifest_out, summary;
  std::size_t portions = 1, vocabulary = 0;
  bool sample_half = false;
  // serve
  std::string tasks, manifest, journal, host = "127.0.0.1", static_dir, admin_env = "EMOLEX_ADMIN_TOKEN";
  int port = 8080;
  // llm-annotate
  std::string replay, endpoint, model = "gpt-3.5-turbo", key_env = "EMOLEX_LLM_API_KEY", log, unannotated;
  std::size_t batch_cap = llm::kDefaultBatchCap, retries = 2, concurrency = 1;
  double rps = 1.0, temperature = 0.0;
  int timeout_ms = 60000;
  std::string rater_id = "llm";
  // aggregate
  std::vector<std::string> records;
  std::size_t raters = 3;
  std::string dropped, llm_rater = "llm";
  // alpha / kappa
  std::string matrix, rater_list, matrix_out, a, b;
  bool select_trio = false;
  // build-lexicon
  std::vector<std::string> annotated;
  bool targets_only = false;
  // extract
  std::string mode = "substring", input;
  // evaluate
  std::vector<std::string> datasets, lexicon_specs, references;
  std::string lexicons, baseline, json_out, table_out, languages = "en,zh,yue";
};

int cmd_mine_terms(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const Corpus corpus = load_corpus(o.corpus, &warnings);
  for (const auto& w : warnings) err << "emolex mine-terms: warning: " << w << "\n";
  const auto dict = SegmenterDictionary::load(o.dict);
  MineOptions mo;
  mo.top_k = o.top_k;
  if (!o.pos.empty()) {
    auto tags = split_list(o.pos);
    mo.allowed_pos = std::set<std::string>(tags.begin(), tags.end());
    for (const auto& t : tags) {
      if (!is_known_pos(t)) throw Error("unknown POS tag \"" + t + "\"");
    }
  }
  if (o.aggregate == "sum") {
    mo.aggregate = ScoreAggregate::kSum;
  } else if (o.aggregate == "max") {
    mo.aggregate = ScoreAggregate::kMax;
  } else {
    throw Error("--aggregate must be sum or max");
  }
  const auto scores = mine_terms(corpus, dict, mo);
  emit(o.out, format_term_scores(scores), out);
  err << "emolex mine-terms: " << scores.size() << " terms from " << corpus.size() << " documents\n";
  return 0;
}

int cmd_lexicon_stats(const Options& o, std::ostream& out, std::ostream&) {
  const Lexicon lex = parse_lexicon(o.lexicon);
  std::optional<Lexicon> base;
  std::optional<TranslationMap> tmap;
  if (!o.base.empty() || !o.tmap.empty()) {
    if (o.base.empty() || o.tmap.empty()) throw Error("--base and --tmap go together");
    base = parse_lexicon(o.base);
    tmap = parse_translation_map(o.tmap);
  }
  const auto report = lexicon_stats(lex, base ? &*base : nullptr, tmap ? &*tmap : nullptr);
  if (o.format == "json") {
    emit(o.out, stats_to_json(report), out);
  } else if (o.format == "table") {
    emit(o.out, stats_to_table(report), out);
  } else {
    throw Error("--format must be table or json");
  }
  return 0;
}

int cmd_make_tasks(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kind = parse_task_kind(o.kind);
  if (!kind) throw Error("--kind must be emotion or translation");
  std::vector<Task> tasks;
  std::size_t vocabulary = 0;
  if (*kind == TaskKind::kEmotionAnnotation) {
    std::vector<std::string> words;
    if (!o.from_records.empty()) {
      std::set<std::string> seen;
      for (const auto& r : load_records(o.from_records)) {
        if (r.kind() == TaskKind::kEmotionAnnotation && seen.insert(r.task_id).second) {
          words.push_back(word_of(r.task_id));
        }
      }
      vocabulary = words.size();
    }
    if (!o.words.empty()) {
      auto listed = read_word_list(o.words);
      if (!o.from_records.empty()) {
        // Restrict the annotated vocabulary to the listed words.
        std::set<std::string> annotated(words.begin(), words.end());
        std::erase_if(listed, [&](const std::string& w) { return !annotated.count(w); });
      }
      words = std::move(listed);
    }
    if (o.words.empty() && o.from_records.empty()) throw Error("emotion tasks need --words or --from-records");
    for (auto& w : words) tasks.push_back(Task::emotion(std::move(w)));
  } else {
    if (o.pairs.empty()) throw Error("translation tasks need --pairs (source<TAB>given translation)");
    std::size_t line_no = 0;
    std::set<std::string> seen;
    for (auto line : io::split_lines(io::read_file(o.pairs))) {
      ++line_no;
      if (line.empty()) continue;
      auto cols = io::split(line, '\t');
      if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
        throw ParseError(o.pairs, line_no, "expected source<TAB>given translation");
      }
      if (seen.insert(std::string(cols[0])).second) {
        tasks.push_back(Task::translation(std::string(cols[0]), std::string(cols[1])));
      }
    }
  }
  if (tasks.empty()) throw Error("no words to make tasks from");
  if (vocabulary == 0) vocabulary = tasks.size();
  if (o.vocabulary) vocabulary = o.vocabulary;
  const std::size_t input = tasks.size();
  if (o.sample_half) tasks = sample_half(tasks, o.seed);
  if (tasks.empty()) throw Error("sampling left no tasks");

  const auto group_names = split_list(o.groups);
  if (group_names.empty()) throw Error("--groups needs at least one group");
  std::map<std::string, std::vector<std::string>> groups;
  if (!o.annotators.empty()) {
    const json j = json::parse(io::read_file(o.annotators), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(o.annotators + ": expected {group: [annotator ids]}");
    for (const auto& g : group_names) {
      if (!j.contains(g)) throw Error(o.annotators + ": no annotators for group " + g);
      groups[g] = j[g].get<std::vector<std::string>>();
    }
  } else {
    const std::size_t width = std::to_string(o.portions).size();
    for (const auto& g : group_names) {
      for (std::size_t i = 1; i <= o.portions; ++i) {
        std::string n = std::to_string(i);
        groups[g].push_back(g + std::string(width - n.size(), '0') + n);
      }
    }
  }

  const auto portions = make_portions(tasks, o.portions, o.seed);
  const auto assignments = build_assignments(o.portions, groups);
  const auto manifest = make_manifest(assignments, portions);

  emit(o.out, format_tasks_jsonl(tasks), out);
  io::write_file_atomic(o.manifest_out, format_manifest(manifest));

  ordered_json summary = {{"kind", std::string(to_string(*kind))},
                          {"input_words", input},
                          {"tasks", tasks.size()},
                          {"vocabulary", vocabulary},
                          {"share_of_vocabulary", share(tasks.size(), vocabulary)},
                          {"portions", ordered_json::array()},
                          {"annotators", assignments.size() * group_names.size()}};
  for (const auto& p : portions) summary["portions"].push_back(p.size());
  if (!o.summary.empty()) io::write_file_atomic(o.summary, summary.dump(2) + "\n");
  err << "emolex make-tasks: " << summary.dump() << "\n";
  return 0;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const Options& o, std::ostream&, std::ostream& err) {
  auto tasks = load_tasks(o.tasks);
  const auto manifest = parse_manifest(io::read_file(o.manifest), o.manifest);
  SessionStore store(std::move(tasks), manifest, o.journal);
  ServerConfig cfg;
  cfg.host = o.host;
  cfg.port = o.port;
  if (!o.static_dir.empty()) cfg.static_dir = o.static_dir;
  if (const char* t = std::getenv(o.admin_env.c_str())) cfg.admin_token = t;
  if (cfg.admin_token.empty()) err << "emolex serve: warning: " << o.admin_env << " unset, /api/export disabled\n";

  AnnotationServer server(store, cfg);
  const int port = server.bind();
  err << "emolex serve: listening on " << cfg.host << ":" << port << " (" << store.journal_entries()
      << " journal entries folded)\n";

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int cmd_llm_annotate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kind = llm::parse_prompt_kind(o.kind);
  const auto words = read_word_list(o.words);
  if (words.empty()) throw Error(o.words + ": no words");
  std::unique_ptr<llm::CompletionTransport> transport;
  if (!o.replay.empty()) {
    transport = std::make_unique<llm::ReplayTransport>(llm::ReplayTransport::load(o.replay));
  } else if (!o.endpoint.empty()) {
    llm::LiveConfig lc;
    lc.base_url = o.endpoint;
    lc.api_key_env = o.key_env;
    lc.requests_per_second = o.rps;
    lc.timeout = std::chrono::milliseconds(o.timeout_ms);
    transport = std::make_unique<llm::LiveTransport>(lc);
  } else {
    throw Error("need --replay FILE or --endpoint URL");
  }
  llm::AnnotateOptions ao;
  ao.batch_cap = o.batch_cap;
  ao.retries = o.retries;
  ao.concurrency = o.concurrency;
  ao.rater_id = o.rater_id;
  ao.params.model = o.model;
  ao.params.temperature = o.temperature;
  const auto result = llm::annotate_batch(*transport, kind, words, ao);
  emit(o.out, format_records_jsonl(result.records), out);
  if (!o.log.empty()) io::write_file_atomic(o.log, llm::log_to_json(result));
  if (!o.unannotated.empty()) {
    std::string text;
    for (const auto& w : result.unannotated) text += w + "\n";
    for (const auto& r : result.rejected) text += r.word + "\n";
    io::write_file_atomic(o.unannotated, text);
  }
  err << "emolex llm-annotate: " << result.records.size() << " of " << words.size() << " words annotated, "
      << result.rejected.size() << " rejected, " << result.unannotated.size() << " unannotated, "
      << result.batches.size() << " requests\n";
  return 0;
}

int cmd_aggregate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto kind = parse_task_kind(o.kind);
  if (!kind) throw Error("--kind must be emotion or translation");
  const auto records = load_record_files(o.records);
  std::optional<std::vector<Task>> tasks;
  if (!o.tasks.empty()) tasks = load_tasks(o.tasks);

  if (*kind == TaskKind::kEmotionAnnotation) {
    std::vector<AnnotationRecord> emo;
    std::set<std::string> wanted;
    if (tasks) {
      for (const auto& t : *tasks) {
        if (t.kind == TaskKind::kEmotionAnnotation) wanted.insert(t.id);
      }
    }
    for (const auto& r : records) {
      if (r.kind() == TaskKind::kEmotionAnnotation && (!tasks || wanted.count(r.task_id))) emo.push_back(r);
    }
    const auto agg = aggregate_all(emo, o.raters);
    Lexicon lex(o.name);
    std::string dropped;
    std::size_t neutral = 0;
    for (const auto& w : agg) {
      const std::string word = word_of(w.task_id);
      if (w.result.dropped) {
        dropped += word + "\n";
        continue;
      }
      if (w.result.labels.empty()) ++neutral;
      lex.add(word, w.result.labels);
    }
    std::size_t missing = 0;
    for (const auto& id : wanted) {
      if (!std::any_of(agg.begin(), agg.end(), [&](const AggregatedWord& a) { return a.task_id == id; })) ++missing;
    }
    emit(o.out, format_lexicon(lex), out);
    if (!o.dropped.empty()) io::write_file_atomic(o.dropped, dropped);
    err << "emolex aggregate: " << agg.size() << " words, " << lex.size() << " kept (" << neutral << " neutral), "
        << std::count(dropped.begin(), dropped.end(), '\n') << " dropped as wrong words, " << missing
        << " tasks without records\n";
    return 0;
  }

  if (!tasks) throw Error("translation aggregation needs --tasks for the given translations");
  std::map<std::string, std::vector<const AnnotationRecord*>> by_task;
  for (const auto& r : records) {
    if (r.kind() == TaskKind::kTranslationValidation) by_task[r.task_id].push_back(&r);
  }
  TranslationMap tmap;
  for (const auto& t : *tasks) {
    if (t.kind != TaskKind::kTranslationValidation) continue;
    tmap.add(t.word, t.given_translation, {Provenance::kNrcTranslated});
    auto it = by_task.find(t.id);
    if (it == by_task.end()) continue;
    auto recs = it->second;
    std::sort(recs.begin(), recs.end(),
              [](const AnnotationRecord* x, const AnnotationRecord* y) { return x->annotator_id < y->annotator_id; });
    for (const AnnotationRecord* r : recs) {
      const ProvenanceSet prov{r->annotator_id == o.llm_rater ? Provenance::kLlm : Provenance::kHuman};
      for (const auto& alt : std::get<TranslationResponse>(r->response).alternate_expressions) {
        tmap.add(t.word, alt, prov);
      }
    }
  }
  emit(o.out, format_translation_map(tmap), out);
  err << "emolex aggregate: translation map with " << tmap.size() << " source words\n";
  return 0;
}

int cmd_alpha(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.matrix.empty()) {
    emit(o.out, alpha_to_json(krippendorff_alpha(load_matrix(o.matrix))), out);
    return 0;
  }
  if (o.records.empty()) throw Error("need --matrix or --records");
  const auto records = load_record_files(o.records);
  std::vector<std::string> task_ids;
  if (!o.tasks.empty()) {
    for (const auto& t : load_tasks(o.tasks)) task_ids.push_back(t.id);
  }

  if (o.select_trio) {
    const auto sel = select_annotator_trio(records, task_ids);
    for (const auto& w : sel.warnings) err << "emolex alpha: warning: " << w << "\n";
    ordered_json j = {{"trio", sel.trio},
                      {"alpha", sel.alpha},
                      {"trios_scored", sel.trios_scored},
                      {"excluded", sel.excluded}};
    emit(o.out, j.dump(2) + "\n", out);
    return 0;
  }

  std::vector<std::string> raters = split_list(o.rater_list);
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.kind() != TaskKind::kEmotionAnnotation) continue;
    ids.insert(r.task_id);
    if (o.rater_list.empty() && std::find(raters.begin(), raters.end(), r.annotator_id) == raters.end()) {
      raters.push_back(r.annotator_id);
    }
  }
  if (o.rater_list.empty()) std::sort(raters.begin(), raters.end());
  if (task_ids.empty()) task_ids.assign(ids.begin(), ids.end());
  const auto m = build_reliability_matrix(records, task_ids, raters);
  if (!o.matrix_out.empty()) io::write_file_atomic(o.matrix_out, format_matrix(m));
  emit(o.out, alpha_to_json(krippendorff_alpha(m)), out);
  return 0;
}

int cmd_kappa(const Options& o, std::ostream& out, std::ostream&) {
  auto read = [](const std::string& path) {
    std::vector<std::string> v;
    for (auto line : io::split_lines(io::read_file(path))) v.emplace_back(line);
    while (!v.empty() && v.back().empty()) v.pop_back();
    return v;
  };
  const auto a = read(o.a);
  const auto b = read(o.b);
  emit(o.out, kappa_to_json(cohens_kappa(std::span<const std::string>(a), std::span<const std::string>(b))), out);
  return 0;
}

int cmd_build_lexicon(const Options& o, std::ostream& out, std::ostream& err) {
  Lexicon result(o.name);
  if (!o.base.empty()) {
    const Lexicon base = parse_lexicon(o.base);
    TranslationMap tmap;
    if (!o.tmap.empty()) tmap = parse_translation_map(o.tmap);
    Lexicon merged = merge_expressions(base, tmap);
    if (o.targets_only) {
      std::set<std::string> targets;
      for (const auto& [src, exprs] : tmap.entries()) {
        for (const auto& e : exprs) targets.insert(e.text);
      }
      for (const auto& [term, entry] : base.entries()) {
        if (!targets.count(term)) merged.erase(term);
      }
    }
    for (const auto& [term, entry] : merged.entries()) result.add(term, entry.labels, entry.provenance);
  } else if (!o.tmap.empty()) {
    throw Error("--tmap needs --base");
  }
  for (const auto& path : o.annotated) {
    const Lexicon annotated = parse_lexicon(path);
    for (const auto& [term, entry] : annotated.entries()) result.add(term, entry.labels);
  }
  if (result.empty() && o.base.empty() && o.annotated.empty()) throw Error("nothing to build: give --base and/or --annotated");
  const Lexicon final_lex = filter_non_neutral(result);
  emit(o.out, format_lexicon(final_lex), out);
  err << "emolex build-lexicon: " << final_lex.size() << " non-neutral terms (" << result.size() - final_lex.size()
      << " neutral removed)\n";
  return 0;
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream&) {
  const Extractor ex(parse_lexicon(o.lexicon), parse_match_mode(o.mode));
  const auto docs = parse_documents_jsonl(io::read_file(o.input), o.input);
  std::vector<std::string> texts;
  for (const auto& d : docs) texts.push_back(d.text);
  const auto profiles = extract_all(ex, texts);
  std::string text;
  for (std::size_t i = 0; i < docs.size(); ++i) text += profile_to_json(docs[i].id, profiles[i]) + "\n";
  emit(o.out, text, out);
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
  std::vector<ParallelDataset> datasets;
  for (const auto& d : o.datasets) {
    if (std::filesystem::is_directory(d)) {
      for (auto& ds : load_datasets(d)) datasets.push_back(std::move(ds));
    } else {
      datasets.push_back(load_dataset(d, split_list(o.languages)));
    }
  }
  LexiconManifest manifest;
  if (!o.lexicons.empty()) manifest = load_lexicon_manifest(o.lexicons);
  for (const auto& s : o.lexicon_specs) manifest.lexicons.push_back(parse_lexicon_spec(s));
  std::string baseline = o.baseline;
  if (baseline.empty() && manifest.baseline) baseline = *manifest.baseline;
  if (baseline.empty()) throw Error("no baseline lexicon: pass --baseline NAME");
  auto [base, rows] = manifest.split(baseline);
  for (const auto& r : o.references) {
    const auto eq = r.find('=');
    if (eq == std::string::npos) throw Error("--reference expects CANDIDATE=REFERENCE, got \"" + r + "\"");
    rows[find_row(rows, r.substr(0, eq))].reference = r.substr(eq + 1);
  }
  const auto report = evaluate_matrix(datasets, rows, base);
  if (!o.json_out.empty()) io::write_file_atomic(o.json_out, report_to_json(report));
  if (!o.table_out.empty()) io::write_file_atomic(o.table_out, report_to_table(report));
  if (o.json_out.empty() && o.table_out.empty()) out << report_to_table(report);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Emotion lexicon construction toolkit", "emolex"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.add_option("--config", "JSON file of flag values; flags given on the command line win");
  Options o;

  auto* mine = app.add_subcommand("mine-terms", "Rank candidate terms of a corpus by TF-IDF");
  mine->add_option("--corpus", o.corpus, "Thread corpus, newline-delimited {id, topic, replies}")
      ->required()->check(CLI::ExistingFile);
  mine->add_option("--dict", o.dict, "Segmentation dictionary, term<TAB>pos")->required()->check(CLI::ExistingFile);
  mine->add_option("--top-k", o.top_k, "Number of terms kept")->capture_default_str();
  mine->add_option("--pos", o.pos, "Allowed POS tags, comma separated (default: " +
                                       join(std::vector<std::string>(default_allowed_pos().begin(),
                                                                     default_allowed_pos().end()), ",") + ")");
  mine->add_option("--aggregate", o.aggregate, "Per-document score aggregation: sum or max")->capture_default_str();
  mine->add_option("--out", o.out, "Output TSV term<TAB>pos<TAB>score (default stdout)");

  auto* stats = app.add_subcommand("lexicon-stats", "Label proportions and expansion statistics of a lexicon");
  stats->add_option("--lexicon", o.lexicon, "Lexicon TSV")->required()->check(CLI::ExistingFile);
  stats->add_option("--base", o.base, "Base lexicon the expressions were derived from")->check(CLI::ExistingFile);
  stats->add_option("--tmap", o.tmap, "Translation map TSV")->check(CLI::ExistingFile);
  stats->add_option("--format", o.format, "table or json")->capture_default_str();
  stats->add_option("--out", o.out, "Output file (default stdout)");

  auto* tasks = app.add_subcommand("make-tasks", "Create tasks, split them into portions and assign annotators");
  tasks->add_option("--kind", o.kind, "emotion or translation")->capture_default_str();
  tasks->add_option("--words", o.words, "Word list, one per line (first TSV column)")->check(CLI::ExistingFile);
  tasks->add_option("--from-records", o.from_records, "LLM emotion records; their words become tasks")
      ->check(CLI::ExistingFile);
  tasks->add_option("--pairs", o.pairs, "Translation pairs source<TAB>given translation")->check(CLI::ExistingFile);
  tasks->add_flag("--sample-half", o.sample_half, "Keep a seeded sample of half the words");
  tasks->add_option("--vocabulary", o.vocabulary, "Vocabulary size for the reported share (default: input size)");
  tasks->add_option("--seed", o.seed, "Seed for sampling and shuffling")->required();
  tasks->add_option("--portions", o.portions, "Number of portions")->capture_default_str();
  tasks->add_option("--groups", o.groups, "Annotator groups, comma separated")->required();
  tasks->add_option("--annotators", o.annotators, "JSON {group: [annotator ids]} (default: <group><index>)")
      ->check(CLI::ExistingFile);
  tasks->add_option("--out", o.out, "Tasks JSONL (default stdout)");
  tasks->add_option("--manifest", o.manifest_out, "Assignment manifest JSON")->required();
  tasks->add_option("--summary", o.summary, "Summary JSON");

  auto* serve = app.add_subcommand("serve", "Run the annotation service");
  serve->add_option("--tasks", o.tasks, "Tasks JSONL")->required()->check(CLI::ExistingFile);
  serve->add_option("--manifest", o.manifest, "Assignment manifest JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--journal", o.journal, "Submission journal (created if missing)")->required();
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--static", o.static_dir, "Directory with the annotator UI bundle")->check(CLI::ExistingDirectory);
  serve->add_option("--admin-token-env", o.admin_env, "Environment variable holding the export token")
      ->capture_default_str();

  auto* llm_cmd = app.add_subcommand("llm-annotate", "Annotate or translate words with a chat-completion model");
  llm_cmd->add_option("--kind", o.kind, "emotion or translation")->capture_default_str();
  llm_cmd->add_option("--words", o.words, "Word list, one per line (first TSV column)")
      ->required()->check(CLI::ExistingFile);
  llm_cmd->add_option("--replay", o.replay, "Recorded responses JSONL {digest, responses}")->check(CLI::ExistingFile);
  llm_cmd->add_option("--endpoint", o.endpoint, "Chat-completions base URL, e.g. https://api.openai.com/v1");
  llm_cmd->add_option("--model", o.model, "Model name")->capture_default_str();
  llm_cmd->add_option("--api-key-env", o.key_env, "Environment variable with the API key")->capture_default_str();
  llm_cmd->add_option("--rps", o.rps, "Maximum requests per second")->capture_default_str();
  llm_cmd->add_option("--timeout-ms", o.timeout_ms, "Request timeout")->capture_default_str();
  llm_cmd->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
  llm_cmd->add_option("--batch-cap", o.batch_cap, "Words per request")->capture_default_str();
  llm_cmd->add_option("--retries", o.retries, "Re-sends of a malformed or failed request")->capture_default_str();
  llm_cmd->add_option("--concurrency", o.concurrency, "Requests in flight")->capture_default_str();
  llm_cmd->add_option("--rater-id", o.rater_id, "Annotator id of the model")->capture_default_str();
  llm_cmd->add_option("--out", o.out, "Records JSONL (default stdout)");
  llm_cmd->add_option("--log", o.log, "Per-request log JSON");
  llm_cmd->add_option("--unannotated", o.unannotated, "Words without an accepted answer");

  auto* agg = app.add_subcommand("aggregate", "Majority-vote emotion labels or collect translations");
  agg->add_option("--kind", o.kind, "emotion or translation")->capture_default_str();
  agg->add_option("--records", o.records, "Record JSONL files")->required()->check(CLI::ExistingFile);
  agg->add_option("--tasks", o.tasks, "Restrict to these tasks (required for translation)")->check(CLI::ExistingFile);
  agg->add_option("--raters", o.raters, "Raters per word (k) for the majority rule")->capture_default_str();
  agg->add_option("--llm-rater", o.llm_rater, "Annotator id counted as the model")->capture_default_str();
  agg->add_option("--name", o.name, "Lexicon name");
  agg->add_option("--out", o.out, "Lexicon TSV or translation map TSV (default stdout)");
  agg->add_option("--dropped", o.dropped, "Words dropped as wrong words");

  auto* alpha = app.add_subcommand("alpha", "Krippendorff's alpha, or pick the most consistent annotator trio");
  alpha->add_option("--matrix", o.matrix, "Reliability matrix TSV")->check(CLI::ExistingFile);
  alpha->add_option("--records", o.records, "Emotion record JSONL files")->check(CLI::ExistingFile);
  alpha->add_option("--tasks", o.tasks, "Tasks to include (default: all in the records)")->check(CLI::ExistingFile);
  alpha->add_option("--raters", o.rater_list, "Rater ids, comma separated (default: all)");
  alpha->add_flag("--select-trio", o.select_trio, "Score every trio of annotators and report the best");
  alpha->add_option("--matrix-out", o.matrix_out, "Write the binarized matrix TSV");
  alpha->add_option("--out", o.out, "Report JSON (default stdout)");

  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label sequences");
  kappa->add_option("--a", o.a, "First sequence, one label per line")->required()->check(CLI::ExistingFile);
  kappa->add_option("--b", o.b, "Second sequence, one label per line")->required()->check(CLI::ExistingFile);
  kappa->add_option("--out", o.out, "Report JSON (default stdout)");

  auto* build = app.add_subcommand("build-lexicon", "Merge translations and annotations into a lexicon");
  build->add_option("--base", o.base, "Base lexicon TSV")->check(CLI::ExistingFile);
  build->add_option("--tmap", o.tmap, "Translation map TSV")->check(CLI::ExistingFile);
  build->add_option("--annotated", o.annotated, "Aggregated lexicon TSVs to add")->check(CLI::ExistingFile);
  build->add_flag("--targets-only", o.targets_only, "Keep only translated expressions, not base words");
  build->add_option("--name", o.name, "Lexicon name");
  build->add_option("--out", o.out, "Lexicon TSV (default stdout)");

  auto* extract_cmd = app.add_subcommand("extract", "Keyword-matching emotion extraction");
  extract_cmd->add_option("--lexicon", o.lexicon, "Lexicon TSV")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--mode", o.mode, "token or substring")->capture_default_str();
  extract_cmd->add_option("--input", o.input, "Documents JSONL {id, text}")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", o.out, "Profiles JSONL (default stdout)");

  auto* eval = app.add_subcommand("evaluate", "Consistency evaluation of lexicons against a baseline");
  eval->add_option("--datasets", o.datasets, "Dataset files or directories")->required()->check(CLI::ExistingPath);
  eval->add_option("--languages", o.languages, "Versions every dataset file must carry")->capture_default_str();
  eval->add_option("--lexicons", o.lexicons, "Lexicon manifest (lexicons.json or its directory)")
      ->check(CLI::ExistingPath);
  eval->add_option("--lexicon", o.lexicon_specs, "Extra lexicon NAME=PATH:LANG:MODE");
  eval->add_option("--baseline", o.baseline, "Name of the baseline lexicon");
  eval->add_option("--reference", o.references, "CANDIDATE=REFERENCE pair for relative change");
  eval->add_option("--json", o.json_out, "Report JSON");
  eval->add_option("--table", o.table_out, "Report table");

  std::vector<std::string> args;
  try {
    args = apply_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "emolex: " << e.what() << "\n\n";
    CLI::App* sub = nullptr;
    for (CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 2;
  } catch (const std::exception& e) {
    err << "emolex: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  log_config(stage, *sub, err);
  try {
    if (stage == "mine-terms") return cmd_mine_terms(o, out, err);
    if (stage == "lexicon-stats") return cmd_lexicon_stats(o, out, err);
    if (stage == "make-tasks") return cmd_make_tasks(o, out, err);
    if (stage == "serve") return cmd_serve(o, out, err);
    if (stage == "llm-annotate") return cmd_llm_annotate(o, out, err);
    if (stage == "aggregate") return cmd_aggregate(o, out, err);
    if (stage == "alpha") return cmd_alpha(o, out, err);
    if (stage == "kappa") return cmd_kappa(o, out, err);
    if (stage == "build-lexicon") return cmd_build_lexicon(o, out, err);
    if (stage == "extract") return cmd_extract(o, out, err);
    if (stage == "evaluate") return cmd_evaluate(o, out, err);
  } catch (const std::exception& e) {
    err << "emolex " << stage << ": error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace emolex::cli
