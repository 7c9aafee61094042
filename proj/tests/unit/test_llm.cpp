#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "emolex/io.hpp"
#include "emolex/llm.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace emolex;
using namespace emolex::llm;
using nlohmann::json;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> ws) { return {ws.begin(), ws.end()}; }

// Answers from a callback; counts calls.
class ScriptTransport : public CompletionTransport {
 public:
  explicit ScriptTransport(std::function<std::string(const std::string&, int)> fn) : fn_(std::move(fn)) {}
  std::string send(const std::string& prompt, const GenerationParams&) override {
    const int n = calls_++;
    return fn_(prompt, n);
  }
  int calls() const { return calls_; }

 private:
  std::function<std::string(const std::string&, int)> fn_;
  std::atomic<int> calls_{0};
};

// Words listed after the blank line of a rendered prompt.
std::vector<std::string> prompt_words(const std::string& prompt) {
  const auto at = prompt.find("\n\n");
  std::vector<std::string> out;
  for (auto w : io::split(std::string_view(prompt).substr(at + 2), '\n')) out.emplace_back(w);
  return out;
}

std::string answer_all_joy(const std::string& prompt) {
  json j = json::object();
  for (const auto& w : prompt_words(prompt)) j[w] = {"joy", "positive"};
  return "Here you go:\n```json\n" + j.dump() + "\n```";
}

}  // namespace

TEST_CASE("prompts are rendered byte-exactly") {
  const auto tr = build_prompt(PromptKind::kTranslation, words({"happy"}));
  CHECK(tr.rfind("As a native Cantonese speaker living in the United States, you are teaching the local people "
                 "to speak Cantonese.", 0) == 0);
  CHECK(tr.substr(tr.size() - 7) == "\n\nhappy");

  const auto em = build_prompt(PromptKind::kEmotion, words({"開心"}));
  CHECK(em.find("anger, anticipation, disgust, fear, joy, negative, positive, sadness, surprise, trust") !=
        std::string::npos);
  CHECK(em.substr(em.size() - 8) == "\n\n開心");

  CHECK(build_prompt(PromptKind::kTranslation, words({"happy", "awful", "trust"})) ==
        io::read_file(EMOLEX_FIXTURES "/../golden/prompts/translation.txt"));
  CHECK(build_prompt(PromptKind::kEmotion, words({"開心", "靚", "嬲"})) ==
        io::read_file(EMOLEX_FIXTURES "/../golden/prompts/emotion.txt"));
}

TEST_CASE("build_prompt rejects bad batches") {
  const std::vector<std::string> none;
  CHECK_THROWS_AS(build_prompt(PromptKind::kEmotion, none), Error);
  std::vector<std::string> many(51, "w");
  CHECK_THROWS_AS(build_prompt(PromptKind::kEmotion, many), Error);
  many.pop_back();
  CHECK_NOTHROW(build_prompt(PromptKind::kEmotion, many));
  CHECK_THROWS_AS(build_prompt(PromptKind::kEmotion, words({"a\nb"})), Error);
  CHECK_THROWS_AS(parse_prompt_kind("summary"), Error);
}

TEST_CASE("validate_response: requested-set rule") {
  const auto req = words({"靚"});
  const auto out = validate_response(PromptKind::kEmotion, req,
                                     R"({"靚": ["joy","positive"], "巴黎": ["surprise"]})");
  CHECK_FALSE(out.malformed);
  REQUIRE(out.accepted.size() == 1);
  CHECK(std::get<EmotionSet>(out.accepted.at("靚")) == EmotionSet{Emotion::kJoy, Emotion::kPositive});
  CHECK(out.unexpected_keys == words({"巴黎"}));
}

TEST_CASE("validate_response: closed label set") {
  const auto req = words({"靚"});
  const auto out = validate_response(PromptKind::kEmotion, req, R"({"靚": ["joy","happiness"]})");
  REQUIRE(out.accepted.size() == 1);
  CHECK(std::get<EmotionSet>(out.accepted.at("靚")) == EmotionSet{Emotion::kJoy});
  CHECK(out.notes.size() == 1);

  const auto empty = validate_response(PromptKind::kEmotion, req, R"({"靚": ["happiness"]})");
  CHECK(empty.accepted.empty());
  REQUIRE(empty.rejected.size() == 1);
  CHECK(empty.rejected[0].word == "靚");
}

TEST_CASE("validate_response: no JSON is malformed") {
  const auto req = words({"靚"});
  const auto out = validate_response(PromptKind::kEmotion, req, "Sure! Here are the emotions you asked for.");
  CHECK(out.malformed);
  CHECK(out.accepted.empty());
}

TEST_CASE("validate_response: translations") {
  const auto req = words({"happy", "sad", "tired"});
  const auto out = validate_response(PromptKind::kTranslation, req,
                                     R"(ok {"happy": "開心", "sad": ["唔開心", " 傷心 ", "唔開心"], "tired": ""})");
  CHECK(std::get<std::vector<std::string>>(out.accepted.at("happy")) == words({"開心"}));
  CHECK(std::get<std::vector<std::string>>(out.accepted.at("sad")) == words({"唔開心", "傷心"}));
  REQUIRE(out.rejected.size() == 1);
  CHECK(out.rejected[0].word == "tired");
}

TEST_CASE("extract_json_object picks the largest parseable object") {
  CHECK(extract_json_object("a {\"x\":1} b {\"y\": {\"z\": \"}\"}} c") == std::optional<std::string>(
                                                                              "{\"y\": {\"z\": \"}\"}}"));
  CHECK_FALSE(extract_json_object("{broken").has_value());
  CHECK_FALSE(extract_json_object("").has_value());
}

TEST_CASE("property: accepted labels stay in the closed set for arbitrary text") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"{", "}", "\"靚\"", ":", "[", "]", ",", "\"joy\"", "\"rage\"",
                                           "\"trust\"", "1", "null", " ", "\"醜\"", "\\", "\""};
  const auto req = words({"靚", "醜"});
  for (int i = 0; i < 500; ++i) {
    std::string text;
    const int len = static_cast<int>(rng() % 30);
    for (int k = 0; k < len; ++k) text += pieces[rng() % pieces.size()];
    const auto out = validate_response(PromptKind::kEmotion, req, text);
    for (const auto& [w, p] : out.accepted) {
      CHECK((w == "靚" || w == "醜"));
      const auto& set = std::get<EmotionSet>(p);
      CHECK_FALSE(set.empty());
    }
  }
}

TEST_CASE("replay transport is deterministic and keyed by digest") {
  const auto p = build_prompt(PromptKind::kEmotion, words({"靚"}));
  CHECK(prompt_digest("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  ReplayTransport t;
  t.add(prompt_digest(p), {"first", "second"});
  CHECK(t.send(p, {}) == "first");
  CHECK(t.send(p, {}) == "second");
  CHECK(t.send(p, {}) == "second");
  CHECK_THROWS_AS(t.send("other", {}), TransportError);

  const std::string line = json{{"digest", "d"}, {"responses", {"x"}}}.dump();
  CHECK_THROWS_AS(ReplayTransport::parse(line + "\n" + line + "\n", "dup"), ParseError);
}

TEST_CASE("annotate_batch: batching, order and rater id") {
  std::vector<std::string> ws;
  for (int i = 0; i < 120; ++i) ws.push_back("w" + std::to_string(i));
  ScriptTransport t([](const std::string& p, int) { return answer_all_joy(p); });
  AnnotateOptions opts;
  opts.concurrency = 4;
  const auto r = annotate_batch(t, PromptKind::kEmotion, ws, opts);
  CHECK(t.calls() == 3);
  REQUIRE(r.records.size() == 120);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(r.records[i].task_id == "emo:" + ws[i]);
    CHECK(r.records[i].annotator_id == "llm");
  }
  CHECK(r.batches.size() == 3);
  CHECK(r.unannotated.empty());
}

TEST_CASE("annotate_batch: malformed reply then valid retry") {
  const auto ws = words({"開心", "嬲"});
  ScriptTransport good([](const std::string& p, int) { return answer_all_joy(p); });
  ScriptTransport flaky([](const std::string& p, int n) { return n == 0 ? std::string("no json here") : answer_all_joy(p); });
  const auto a = annotate_batch(good, PromptKind::kEmotion, ws);
  const auto b = annotate_batch(flaky, PromptKind::kEmotion, ws);
  CHECK(format_records_jsonl(a.records) == format_records_jsonl(b.records));
  REQUIRE(b.batches.size() == 1);
  CHECK(b.batches[0].attempts == 2);
  CHECK(b.batches[0].notes.size() == 1);
  CHECK(a.batches[0].notes.empty());
}

TEST_CASE("annotate_batch: re-queue and coverage accounting") {
  // "ghost" is never answered; "meh" only gets an invalid label; "late" only on the re-queue.
  const auto ws = words({"開心", "ghost", "meh", "late"});
  ScriptTransport t([](const std::string& p, int) {
    json j = json::object();
    const auto req = prompt_words(p);
    const bool requeue = req.size() < 4;
    for (const auto& w : req) {
      if (w == "開心") j[w] = {"joy"};
      if (w == "meh") j[w] = {"boredom"};
      if (w == "late" && requeue) j[w] = {"anticipation"};
    }
    return j.dump();
  });
  const auto r = annotate_batch(t, PromptKind::kEmotion, ws);
  CHECK(t.calls() == 2);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].task_id == "emo:開心");
  CHECK(r.records[1].task_id == "emo:late");
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].word == "meh");
  CHECK(r.unannotated == words({"ghost"}));
  CHECK(r.batches[1].requeue);
}

TEST_CASE("property: coverage partition and closed labels over random replies") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> labels = {"joy", "anger", "rage", "trust", "meh", "fear"};
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::string> ws;
    const int n = 1 + static_cast<int>(rng() % 70);
    for (int i = 0; i < n; ++i) ws.push_back("w" + std::to_string(rng() % 90));
    std::mutex mu;
    ScriptTransport t([&](const std::string& p, int) {
      std::lock_guard lock(mu);
      if (rng() % 5 == 0) return std::string("garbage");
      json j = json::object();
      for (const auto& w : prompt_words(p)) {
        if (rng() % 4 == 0) continue;
        json ls = json::array();
        for (int k = static_cast<int>(rng() % 3); k >= 0; --k) ls.push_back(labels[rng() % labels.size()]);
        j[w] = ls;
      }
      if (rng() % 3 == 0) j["stray"] = {"joy"};
      return j.dump();
    });
    AnnotateOptions opts;
    opts.batch_cap = 1 + rng() % 20;
    opts.retries = rng() % 3;
    opts.concurrency = 1 + rng() % 4;
    AnnotateResult r;
    try {
      r = annotate_batch(t, PromptKind::kEmotion, ws, opts);
    } catch (const Error&) {
      continue;  // every first-pass batch failed
    }
    std::set<std::string> requested(ws.begin(), ws.end());
    std::multiset<std::string> covered;
    for (const auto& rec : r.records) {
      covered.insert(rec.task_id.substr(4));
      const auto& set = std::get<EmotionResponse>(rec.response).labels;
      CHECK_FALSE(set.empty());
    }
    for (const auto& x : r.rejected) covered.insert(x.word);
    for (const auto& x : r.unannotated) covered.insert(x);
    CHECK(covered.size() == requested.size());
    CHECK(std::set<std::string>(covered.begin(), covered.end()) == requested);
  }
}

TEST_CASE("annotate_batch: all batches failing is an error") {
  ScriptTransport t([](const std::string&, int) -> std::string { throw TransportError("down"); });
  CHECK_THROWS_AS(annotate_batch(t, PromptKind::kEmotion, words({"a", "b"})), Error);
  CHECK(t.calls() == 3);
  const std::vector<std::string> none;
  CHECK_THROWS_AS(annotate_batch(t, PromptKind::kEmotion, none), Error);
}

TEST_CASE("annotate_batch: failed batch does not stop the others") {
  std::vector<std::string> ws = {"a", "b", "c"};
  ScriptTransport t([](const std::string& p, int) -> std::string {
    if (prompt_words(p)[0] == "a") throw TransportError("timeout");
    return answer_all_joy(p);
  });
  AnnotateOptions opts;
  opts.batch_cap = 2;
  const auto r = annotate_batch(t, PromptKind::kEmotion, ws, opts);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].task_id == "emo:c");
  CHECK(r.unannotated == words({"a", "b"}));
  CHECK(r.batches[0].failed);
}

TEST_CASE("translation records carry every expression") {
  ScriptTransport t([](const std::string&, int) { return std::string(R"({"happy": ["開心", "高興"]})"); });
  const auto r = annotate_batch(t, PromptKind::kTranslation, words({"happy"}));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].task_id == "tr:happy");
  CHECK(std::get<TranslationResponse>(r.records[0].response).alternate_expressions == words({"開心", "高興"}));
}

TEST_CASE("live transport speaks chat completions and respects the rate limit") {
  httplib::Server server;
  std::mutex mu;
  std::vector<std::chrono::steady_clock::time_point> arrivals;
  json last_body;
  std::string last_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      arrivals.push_back(std::chrono::steady_clock::now());
      last_body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
    }
    json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "{\"a\": [\"joy\"]}"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("EMOLEX_TEST_KEY", "sk-test", 1);
  LiveConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.api_key_env = "EMOLEX_TEST_KEY";
  cfg.requests_per_second = 20;
  cfg.timeout = std::chrono::milliseconds(5000);
  LiveTransport live(cfg);

  GenerationParams params;
  params.model = "test-model";
  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) {
    callers.emplace_back([&] { CHECK(live.send("prompt", params) == "{\"a\": [\"joy\"]}"); });
  }
  for (auto& c : callers) c.join();
  server.stop();
  th.join();

  REQUIRE(arrivals.size() == 6);
  std::sort(arrivals.begin(), arrivals.end());
  // Six requests at 20/s cannot arrive in less than five intervals of 50 ms.
  CHECK(arrivals.back() - arrivals.front() >= std::chrono::milliseconds(240));
  CHECK(last_auth == "Bearer sk-test");
  CHECK(last_body["model"] == "test-model");
  CHECK(last_body["temperature"] == 0.0);
  CHECK(last_body["messages"][0]["content"] == "prompt");

  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.timeout = std::chrono::milliseconds(500);
  LiveTransport dead(cfg);
  CHECK_THROWS_AS(dead.send("p", params), TransportError);

  ::unsetenv("EMOLEX_TEST_KEY");
  CHECK_THROWS_AS(LiveTransport{cfg}, Error);
}
