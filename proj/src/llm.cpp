#include "emolex/llm.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <exception>
#include <set>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"

namespace emolex::llm {

using nlohmann::json;

namespace {

constexpr std::string_view kTranslationPrompt =
    "As a native Cantonese speaker living in the United States, you are teaching the local people to "
    "speak Cantonese. I'll give you a list of English words. Please translate them into colloquial "
    "Cantonese expressions, and finally output them in JSON format, where the key is the original "
    "English word, and the value is the Cantonese word. Each word should be as concise as possible.";

constexpr std::string_view kEmotionPrompt =
    "As an expert in understanding Cantonese texts, you can recognize Cantonese words with distinct "
    "emotions and describe them with the following basic emotions: anger, anticipation, disgust, fear, "
    "joy, negative, positive, sadness, surprise, trust. I will give you a vocabulary list, and some of "
    "these words are just neutral while some can have more than one type of emotions. Please identify "
    "the words that have very distinct and clear emotions, and output in JSON format, where the key is "
    "the word, and the value is the list of emotions that the word has.";

const PromptTemplate kTemplates[] = {
    {PromptKind::kTranslation, kTranslationPrompt},
    {PromptKind::kEmotion, kEmotionPrompt},
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// End of the balanced object starting at text[start] == '{', or npos.
std::size_t matching_brace(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view to_string(PromptKind k) {
  return k == PromptKind::kTranslation ? "translation" : "emotion";
}

PromptKind parse_prompt_kind(std::string_view s) {
  if (s == "translation") return PromptKind::kTranslation;
  if (s == "emotion") return PromptKind::kEmotion;
  throw Error("unknown prompt kind \"" + std::string(s) + "\" (expected translation or emotion)");
}

TaskKind task_kind(PromptKind k) {
  return k == PromptKind::kTranslation ? TaskKind::kTranslationValidation : TaskKind::kEmotionAnnotation;
}

const PromptTemplate& prompt_template(PromptKind kind) {
  return kTemplates[kind == PromptKind::kTranslation ? 0 : 1];
}

std::string build_prompt(PromptKind kind, std::span<const std::string> words, std::size_t batch_cap) {
  if (words.empty()) throw Error("build_prompt: empty word list");
  if (words.size() > batch_cap) {
    throw Error("build_prompt: " + std::to_string(words.size()) + " words exceed the batch cap of " +
                std::to_string(batch_cap));
  }
  std::string out(prompt_template(kind).fixed_text);
  out += "\n\n";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].find('\n') != std::string::npos) throw Error("build_prompt: word contains a newline");
    if (i) out += '\n';
    out += words[i];
  }
  return out;
}

std::optional<std::string> extract_json_object(std::string_view text) {
  std::optional<std::string> best;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    const std::size_t end = matching_brace(text, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    const std::string_view cand = text.substr(i, end - i + 1);
    const json j = json::parse(cand, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      if (!best || cand.size() > best->size()) best = std::string(cand);
      i = end + 1;  // nested objects are smaller
    } else {
      ++i;
    }
  }
  return best;
}

ValidationOutcome validate_response(PromptKind kind, std::span<const std::string> requested,
                                    std::string_view response) {
  ValidationOutcome out;
  const auto obj = extract_json_object(response);
  if (!obj) {
    out.malformed = true;
    return out;
  }
  const std::unordered_set<std::string> wanted(requested.begin(), requested.end());
  const json j = json::parse(*obj);
  for (const auto& [raw_key, value] : j.items()) {
    std::string key = raw_key;
    if (!wanted.count(key)) key = trim(raw_key);
    if (!wanted.count(key)) {
      out.unexpected_keys.push_back(raw_key);
      continue;
    }
    if (out.accepted.count(key)) continue;

    if (kind == PromptKind::kEmotion) {
      json labels = value.is_string() ? json::array({value}) : value;
      if (!labels.is_array()) {
        out.rejected.push_back({key, "value is not a list of emotions"});
        continue;
      }
      EmotionSet set;
      for (const auto& l : labels) {
        if (!l.is_string()) {
          out.notes.push_back(key + ": dropped non-string label " + l.dump());
          continue;
        }
        if (auto e = parse_emotion(lower(trim(l.get<std::string>())))) {
          set.insert(*e);
        } else {
          out.notes.push_back(key + ": dropped label \"" + l.get<std::string>() + "\"");
        }
      }
      if (set.empty()) {
        out.rejected.push_back({key, "no valid emotion labels"});
      } else {
        out.accepted.emplace(key, set);
      }
    } else {
      json values = value.is_string() ? json::array({value}) : value;
      if (!values.is_array()) {
        out.rejected.push_back({key, "value is not a string or list of strings"});
        continue;
      }
      std::vector<std::string> exprs;
      for (const auto& v : values) {
        const std::string s = v.is_string() ? trim(v.get<std::string>()) : std::string();
        if (s.empty()) {
          out.notes.push_back(key + ": dropped expression " + v.dump());
        } else if (std::find(exprs.begin(), exprs.end(), s) == exprs.end()) {
          exprs.push_back(s);
        }
      }
      if (exprs.empty()) {
        out.rejected.push_back({key, "no non-empty expression"});
      } else {
        out.accepted.emplace(key, std::move(exprs));
      }
    }
  }
  // A key that was rejected earlier but accepted later (duplicates after trimming)
  // counts as accepted.
  std::erase_if(out.rejected, [&](const RejectedWord& r) { return out.accepted.count(r.word) > 0; });
  return out;
}

std::string prompt_digest(std::string_view prompt) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(prompt.data(), prompt.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("prompt_digest: SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

ReplayTransport ReplayTransport::parse(std::string_view jsonl, const std::string& source) {
  ReplayTransport t;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("digest") || !j["digest"].is_string() ||
        !j.contains("responses") || !j["responses"].is_array() || j["responses"].empty()) {
      throw ParseError(source, line_no, "expected {\"digest\": string, \"responses\": [string, ...]}");
    }
    std::vector<std::string> responses;
    for (const auto& r : j["responses"]) {
      if (!r.is_string()) throw ParseError(source, line_no, "responses must be strings");
      responses.push_back(r.get<std::string>());
    }
    const std::string digest = j["digest"].get<std::string>();
    if (t.responses_.count(digest)) throw ParseError(source, line_no, "duplicate digest " + digest);
    t.add(digest, std::move(responses));
  }
  return t;
}

ReplayTransport ReplayTransport::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

void ReplayTransport::add(std::string digest, std::vector<std::string> responses) {
  std::lock_guard lock(mu_);
  responses_[std::move(digest)] = std::move(responses);
}

std::string ReplayTransport::send(const std::string& prompt, const GenerationParams&) {
  const std::string digest = prompt_digest(prompt);
  std::lock_guard lock(mu_);
  auto it = responses_.find(digest);
  if (it == responses_.end()) throw TransportError("replay: no recorded response for prompt digest " + digest);
  std::size_t& n = served_[digest];
  const std::string& r = it->second[std::min(n, it->second.size() - 1)];
  ++n;
  return r;
}

LiveTransport::LiveTransport(LiveConfig config) : config_(std::move(config)) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) throw Error("environment variable " + config_.api_key_env + " is not set");
  api_key_ = key;
  if (config_.requests_per_second <= 0) throw Error("requests_per_second must be positive");
}

void LiveTransport::wait_for_slot() {
  using namespace std::chrono;
  const auto interval = duration_cast<steady_clock::duration>(duration<double>(1.0 / config_.requests_per_second));
  steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = std::max(next_slot_, steady_clock::now());
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

std::string LiveTransport::send(const std::string& prompt, const GenerationParams& params) {
  const std::string& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("base URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string host = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  const json body = {{"model", params.model},
                     {"temperature", params.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};

  wait_for_slot();
  httplib::Client client(host);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + host + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  const json reply = json::parse(res->body, nullptr, false);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransportError("endpoint reply has no choices[0].message.content");
  }
}

namespace {

struct BatchRun {
  BatchLog log;
  ValidationOutcome outcome;
};

BatchRun run_batch(CompletionTransport& transport, PromptKind kind, std::vector<std::string> words,
                   const AnnotateOptions& opts) {
  BatchRun run;
  run.log.words = std::move(words);
  const std::string prompt = build_prompt(kind, run.log.words, opts.batch_cap);
  for (std::size_t attempt = 0; attempt <= opts.retries; ++attempt) {
    ++run.log.attempts;
    try {
      const std::string text = transport.send(prompt, opts.params);
      run.outcome = validate_response(kind, run.log.words, text);
      if (!run.outcome.malformed) {
        run.log.failed = false;
        run.log.accepted = run.outcome.accepted.size();
        run.log.unexpected_keys = run.outcome.unexpected_keys;
        run.log.notes.insert(run.log.notes.end(), run.outcome.notes.begin(), run.outcome.notes.end());
        return run;
      }
      run.log.notes.push_back("attempt " + std::to_string(attempt + 1) + ": no JSON object in response");
    } catch (const std::exception& e) {
      run.log.notes.push_back("attempt " + std::to_string(attempt + 1) + ": " + e.what());
    }
  }
  run.log.failed = true;
  run.outcome = {};
  return run;
}

std::vector<BatchRun> run_all(CompletionTransport& transport, PromptKind kind,
                              const std::vector<std::string>& words, const AnnotateOptions& opts) {
  std::vector<std::vector<std::string>> chunks;
  for (std::size_t i = 0; i < words.size(); i += opts.batch_cap) {
    chunks.emplace_back(words.begin() + static_cast<std::ptrdiff_t>(i),
                        words.begin() + static_cast<std::ptrdiff_t>(std::min(words.size(), i + opts.batch_cap)));
  }
  std::vector<BatchRun> runs(chunks.size());
  const int n = static_cast<int>(chunks.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, opts.concurrency));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    runs[i] = run_batch(transport, kind, std::move(chunks[i]), opts);
  }
  return runs;
}

}  // namespace

AnnotateResult annotate_batch(CompletionTransport& transport, PromptKind kind,
                              std::span<const std::string> words, const AnnotateOptions& opts) {
  if (words.empty()) throw Error("annotate_batch: empty word list");
  if (opts.batch_cap == 0) throw Error("annotate_batch: batch cap must be positive");

  std::vector<std::string> unique;
  std::unordered_set<std::string> seen;
  for (const auto& w : words) {
    if (w.empty() || w.find('\n') != std::string::npos) {
      throw Error("annotate_batch: words must be non-empty single lines");
    }
    if (seen.insert(w).second) unique.push_back(w);
  }

  AnnotateResult result;
  std::map<std::string, Payload> accepted;
  std::map<std::string, std::string> rejected;
  std::set<std::string> failed_words;

  auto absorb = [&](std::vector<BatchRun>& runs, bool requeue) {
    for (auto& run : runs) {
      run.log.index = result.batches.size();
      run.log.requeue = requeue;
      if (run.log.failed) {
        failed_words.insert(run.log.words.begin(), run.log.words.end());
      } else {
        for (const auto& w : run.log.words) failed_words.erase(w);
      }
      for (auto& [w, p] : run.outcome.accepted) {
        accepted.emplace(w, std::move(p));
        rejected.erase(w);
      }
      for (const auto& r : run.outcome.rejected) {
        if (!accepted.count(r.word)) rejected[r.word] = r.reason;
      }
      result.batches.push_back(std::move(run.log));
    }
  };

  auto first = run_all(transport, kind, unique, opts);
  const bool all_failed = std::all_of(first.begin(), first.end(), [](const BatchRun& r) { return r.log.failed; });
  if (all_failed) {
    throw Error("annotate_batch: all " + std::to_string(first.size()) + " batches failed; last error: " +
                (first.back().log.notes.empty() ? std::string("unknown") : first.back().log.notes.back()));
  }
  absorb(first, false);

  std::vector<std::string> missing;
  for (const auto& w : unique) {
    if (!accepted.count(w) && !failed_words.count(w)) missing.push_back(w);
  }
  if (!missing.empty()) {
    auto again = run_all(transport, kind, missing, opts);
    absorb(again, true);
  }

  const TaskKind tk = task_kind(kind);
  for (const auto& w : unique) {
    auto it = accepted.find(w);
    if (it != accepted.end()) {
      AnnotationRecord rec{opts.rater_id, make_task_id(tk, w), {}};
      if (kind == PromptKind::kEmotion) {
        rec.response = EmotionResponse{std::get<EmotionSet>(it->second), false, std::nullopt};
      } else {
        rec.response = TranslationResponse{std::get<std::vector<std::string>>(it->second)};
      }
      result.records.push_back(std::move(rec));
    } else if (auto r = rejected.find(w); r != rejected.end()) {
      result.rejected.push_back({w, r->second});
    } else {
      result.unannotated.push_back(w);
    }
  }
  return result;
}

std::string log_to_json(const AnnotateResult& result) {
  json batches = json::array();
  for (const auto& b : result.batches) {
    batches.push_back({{"index", b.index},
                       {"requeue", b.requeue},
                       {"words", b.words},
                       {"attempts", b.attempts},
                       {"failed", b.failed},
                       {"accepted", b.accepted},
                       {"unexpected_keys", b.unexpected_keys},
                       {"notes", b.notes}});
  }
  json rejected = json::array();
  for (const auto& r : result.rejected) rejected.push_back({{"word", r.word}, {"reason", r.reason}});
  json out = {{"records", result.records.size()},
              {"batches", batches},
              {"rejected", rejected},
              {"unannotated", result.unannotated}};
  return out.dump(2) + "\n";
}

}  // namespace emolex::llm
