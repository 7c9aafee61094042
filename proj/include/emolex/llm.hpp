#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emolex/annotation.hpp"
#include "emolex/emotion.hpp"
#include "emolex/io.hpp"

namespace emolex::llm {

enum class PromptKind { kTranslation, kEmotion };

std::string_view to_string(PromptKind k);
PromptKind parse_prompt_kind(std::string_view s);
TaskKind task_kind(PromptKind k);

struct PromptTemplate {
  PromptKind kind;
  std::string_view fixed_text;
};

const PromptTemplate& prompt_template(PromptKind kind);

inline constexpr std::size_t kDefaultBatchCap = 50;

/// fixed_text, a blank line, then one word per line.
std::string build_prompt(PromptKind kind, std::span<const std::string> words,
                         std::size_t batch_cap = kDefaultBatchCap);

/// Emotion labels or translated expressions for one word.
using Payload = std::variant<EmotionSet, std::vector<std::string>>;

struct RejectedWord {
  std::string word;
  std::string reason;

  bool operator==(const RejectedWord&) const = default;
};

struct ValidationOutcome {
  std::map<std::string, Payload> accepted;
  std::vector<RejectedWord> rejected;
  std::vector<std::string> unexpected_keys;
  std::vector<std::string> notes;  // dropped labels and similar repairs
  bool malformed = false;
};

/// Finds the largest substring of `text` that parses as a JSON object.
std::optional<std::string> extract_json_object(std::string_view text);

ValidationOutcome validate_response(PromptKind kind, std::span<const std::string> requested,
                                    std::string_view response);

struct GenerationParams {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Anything that turns a prompt into completion text. Implementations must
/// tolerate concurrent callers.
class CompletionTransport {
 public:
  virtual ~CompletionTransport() = default;
  virtual std::string send(const std::string& prompt, const GenerationParams& params) = 0;
};

/// Lowercase hex SHA-256 of the prompt bytes; the replay key.
std::string prompt_digest(std::string_view prompt);

/// Serves recorded responses. Fixture lines look like
///   {"digest": "<sha256 hex>", "responses": ["...", "..."]}
/// The n-th request for a digest gets responses[n], repeating the last one.
class ReplayTransport : public CompletionTransport {
 public:
  static ReplayTransport load(const std::filesystem::path& path);
  static ReplayTransport parse(std::string_view jsonl, const std::string& source);

  void add(std::string digest, std::vector<std::string> responses);
  std::string send(const std::string& prompt, const GenerationParams& params) override;

  ReplayTransport() = default;
  ReplayTransport(ReplayTransport&& o) noexcept : responses_(std::move(o.responses_)), served_(std::move(o.served_)) {}

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> served_;
};

struct LiveConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "EMOLEX_LLM_API_KEY";
  double requests_per_second = 1.0;
  std::chrono::milliseconds timeout{60000};
};

/// Chat-completions client: POST {base_url}/chat/completions.
class LiveTransport : public CompletionTransport {
 public:
  explicit LiveTransport(LiveConfig config);
  std::string send(const std::string& prompt, const GenerationParams& params) override;

 private:
  void wait_for_slot();

  LiveConfig config_;
  std::string api_key_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
};

struct AnnotateOptions {
  std::size_t batch_cap = kDefaultBatchCap;
  std::size_t retries = 2;
  std::size_t concurrency = 1;
  std::string rater_id = "llm";
  GenerationParams params;
};

struct BatchLog {
  std::size_t index = 0;
  bool requeue = false;
  std::vector<std::string> words;
  std::size_t attempts = 0;
  bool failed = false;
  std::vector<std::string> notes;
  std::size_t accepted = 0;
  std::vector<std::string> unexpected_keys;
};

struct AnnotateResult {
  std::vector<AnnotationRecord> records;  // input word order
  std::vector<BatchLog> batches;
  std::vector<RejectedWord> rejected;
  std::vector<std::string> unannotated;
};

/// Sends `words` in capped batches, validates, retries malformed replies and
/// re-queues missing words once. Throws if every first-pass batch fails.
AnnotateResult annotate_batch(CompletionTransport& transport, PromptKind kind,
                              std::span<const std::string> words, const AnnotateOptions& options = {});

std::string log_to_json(const AnnotateResult& result);

}  // namespace emolex::llm
