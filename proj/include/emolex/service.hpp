#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emolex/annotation.hpp"

namespace emolex {

/// Assigned tasks, per-annotator progress and an append-only journal of
/// submissions. In-memory state is rebuilt by folding the journal.
class SessionStore {
 public:
  enum class Status { kOk, kNoContent, kNotFound, kForbidden, kUnprocessable };

  struct NextResult {
    Status status;
    const Task* task = nullptr;
  };

  struct SubmitResult {
    Status status;
    std::string message;
    std::vector<FieldError> errors;
    std::uint64_t seq = 0;
  };

  struct Progress {
    std::size_t submitted = 0;
    std::size_t pending = 0;

    bool operator==(const Progress&) const = default;
  };

  /// Opens (creating if needed) the journal and folds it. A torn final line
  /// from a crash mid-append is cut off; any other bad line is an error.
  SessionStore(std::vector<Task> tasks, const std::vector<ManifestEntry>& manifest,
               std::filesystem::path journal);
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  bool has_annotator(std::string_view annotator_id) const;

  /// Lowest-indexed pending task in the annotator's assignment.
  NextResult next_task(const std::string& annotator_id) const;

  /// Validates `payload_json` for the task's kind, appends to the journal,
  /// syncs it, and only then updates state. Tasks past the first pending one
  /// are refused (no skipping); earlier ones may be resubmitted.
  SubmitResult submit(const std::string& annotator_id, const std::string& task_id, std::string_view payload_json);

  std::optional<Progress> progress(const std::string& annotator_id) const;
  std::map<std::string, Progress> progress_all() const;
  Progress progress_global() const;

  /// Latest record per (annotator, task), ordered by annotator id then
  /// assignment order.
  std::vector<AnnotationRecord> export_records() const;
  void export_to(const std::filesystem::path& path) const;

  std::size_t journal_entries() const;
  const std::filesystem::path& journal_path() const { return journal_path_; }

 private:
  struct AnnotatorState {
    std::vector<std::size_t> tasks;                     // indices into tasks_, assignment order
    std::unordered_map<std::string, std::size_t> slot;  // task id -> position in `tasks`
    std::vector<std::optional<AnnotationRecord>> latest;
    std::size_t submitted = 0;
    std::size_t first_pending = 0;
  };

  void apply(AnnotationRecord rec);
  void fold_journal();

  std::vector<Task> tasks_;
  std::unordered_map<std::string, std::size_t> task_index_;
  std::map<std::string, AnnotatorState, std::less<>> annotators_;

  std::filesystem::path journal_path_;
  int fd_ = -1;
  std::uint64_t next_seq_ = 1;
  std::size_t entries_ = 0;

  mutable std::shared_mutex state_mu_;
  std::mutex writer_mu_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;                      // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  std::string admin_token;              // empty disables /api/export
};

/// HTTP front end for a SessionStore:
///   GET  /api/tasks/next?annotator_id=...
///   POST /api/annotations {annotator_id, task_id, payload}
///   GET  /api/progress[?annotator_id=...]
///   GET  /api/export   (Authorization: Bearer <admin token>)
/// plus static files from static_dir at "/".
class AnnotationServer {
 public:
  AnnotationServer(SessionStore& store, ServerConfig config);
  ~AnnotationServer();

  /// Binds; returns the bound port.
  int bind();
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace emolex
