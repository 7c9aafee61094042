#include "emolex/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "httplib.h"
#include "json.hpp"

namespace emolex {

using nlohmann::json;

namespace {

std::string sys_error(const std::string& what, const std::filesystem::path& p) {
  return what + " " + p.string() + ": " + std::strerror(errno);
}

}  // namespace

SessionStore::SessionStore(std::vector<Task> tasks, const std::vector<ManifestEntry>& manifest,
                           std::filesystem::path journal)
    : tasks_(std::move(tasks)), journal_path_(std::move(journal)) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!task_index_.emplace(tasks_[i].id, i).second) throw Error("duplicate task id \"" + tasks_[i].id + "\"");
  }
  for (const auto& entry : manifest) {
    auto& st = annotators_[entry.annotator_id];
    for (const auto& id : entry.task_ids) {
      auto it = task_index_.find(id);
      if (it == task_index_.end()) {
        throw Error("manifest assigns unknown task \"" + id + "\" to " + entry.annotator_id);
      }
      if (st.slot.emplace(id, st.tasks.size()).second) st.tasks.push_back(it->second);
    }
    st.latest.resize(st.tasks.size());
  }
  fold_journal();
  fd_ = ::open(journal_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(sys_error("cannot open journal", journal_path_));
}

SessionStore::~SessionStore() {
  if (fd_ >= 0) ::close(fd_);
}

void SessionStore::fold_journal() {
  if (!std::filesystem::exists(journal_path_)) return;
  const std::string text = io::read_file(journal_path_);
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      // Torn final append: never acknowledged, so drop it.
      std::filesystem::resize_file(journal_path_, pos);
      break;
    }
    ++line_no;
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("seq") || !j.contains("record")) {
      throw ParseError(journal_path_.string(), line_no, "corrupt journal entry");
    }
    AnnotationRecord rec;
    try {
      rec = record_from_json(j["record"].dump());
    } catch (const Error& e) {
      throw ParseError(journal_path_.string(), line_no, e.what());
    }
    next_seq_ = std::max(next_seq_, j["seq"].get<std::uint64_t>() + 1);
    ++entries_;
    apply(std::move(rec));
  }
}

void SessionStore::apply(AnnotationRecord rec) {
  auto st = annotators_.find(rec.annotator_id);
  if (st == annotators_.end()) return;
  auto slot = st->second.slot.find(rec.task_id);
  if (slot == st->second.slot.end()) return;
  AnnotatorState& a = st->second;
  auto& cell = a.latest[slot->second];
  if (!cell) ++a.submitted;
  cell = std::move(rec);
  while (a.first_pending < a.tasks.size() && a.latest[a.first_pending]) ++a.first_pending;
}

bool SessionStore::has_annotator(std::string_view annotator_id) const {
  std::shared_lock lock(state_mu_);
  return annotators_.find(annotator_id) != annotators_.end();
}

SessionStore::NextResult SessionStore::next_task(const std::string& annotator_id) const {
  std::shared_lock lock(state_mu_);
  auto it = annotators_.find(annotator_id);
  if (it == annotators_.end()) return {Status::kNotFound};
  const AnnotatorState& a = it->second;
  if (a.first_pending >= a.tasks.size()) return {Status::kNoContent};
  return {Status::kOk, &tasks_[a.tasks[a.first_pending]]};
}

SessionStore::SubmitResult SessionStore::submit(const std::string& annotator_id, const std::string& task_id,
                                                std::string_view payload_json) {
  {
    std::shared_lock lock(state_mu_);
    auto it = annotators_.find(annotator_id);
    if (it == annotators_.end()) return {Status::kNotFound, "unknown annotator \"" + annotator_id + "\"", {}};
    if (!it->second.slot.count(task_id)) {
      return {Status::kForbidden, "task \"" + task_id + "\" is not assigned to " + annotator_id, {}};
    }
  }
  const Task& task = tasks_[task_index_.at(task_id)];
  AnnotationRecord rec{annotator_id, task_id, {}};
  try {
    rec.response = response_from_json(task.kind, payload_json);
  } catch (const SchemaError& e) {
    return {Status::kUnprocessable, "payload does not match the " + std::string(to_string(task.kind)) + " schema",
            e.errors()};
  }

  std::lock_guard writer(writer_mu_);
  {
    // Tasks are served in order with no skipping; earlier ones may be resubmitted.
    const AnnotatorState& a = annotators_.find(annotator_id)->second;
    if (a.slot.at(task_id) > a.first_pending) {
      return {Status::kForbidden, "task \"" + task_id + "\" is not yet reachable for " + annotator_id +
                                      "; tasks are answered in order", {}};
    }
  }
  const std::uint64_t seq = next_seq_;
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now().time_since_epoch());
  json entry = {{"seq", seq}, {"submitted_at_ms", now.count()}, {"record", json::parse(record_to_json(rec))}};
  const std::string line = entry.dump() + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(sys_error("journal append failed for", journal_path_));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw Error(sys_error("journal fsync failed for", journal_path_));
  ++next_seq_;

  std::unique_lock lock(state_mu_);
  ++entries_;
  apply(std::move(rec));
  return {Status::kOk, "stored", {}, seq};
}

std::optional<SessionStore::Progress> SessionStore::progress(const std::string& annotator_id) const {
  std::shared_lock lock(state_mu_);
  auto it = annotators_.find(annotator_id);
  if (it == annotators_.end()) return std::nullopt;
  return Progress{it->second.submitted, it->second.tasks.size() - it->second.submitted};
}

std::map<std::string, SessionStore::Progress> SessionStore::progress_all() const {
  std::shared_lock lock(state_mu_);
  std::map<std::string, Progress> out;
  for (const auto& [id, a] : annotators_) out[id] = {a.submitted, a.tasks.size() - a.submitted};
  return out;
}

SessionStore::Progress SessionStore::progress_global() const {
  Progress g;
  for (const auto& [id, p] : progress_all()) {
    g.submitted += p.submitted;
    g.pending += p.pending;
  }
  return g;
}

std::vector<AnnotationRecord> SessionStore::export_records() const {
  std::shared_lock lock(state_mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& [id, a] : annotators_) {
    for (const auto& rec : a.latest) {
      if (rec) out.push_back(*rec);
    }
  }
  return out;
}

void SessionStore::export_to(const std::filesystem::path& path) const {
  io::write_file_atomic(path, format_records_jsonl(export_records()));
}

std::size_t SessionStore::journal_entries() const {
  std::shared_lock lock(state_mu_);
  return entries_;
}

struct AnnotationServer::Impl {
  SessionStore& store;
  ServerConfig config;
  httplib::Server server;
  int port = 0;

  Impl(SessionStore& s, ServerConfig c) : store(s), config(std::move(c)) {}

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
  }

  static json progress_json(const SessionStore::Progress& p) {
    return {{"submitted", p.submitted}, {"pending", p.pending}};
  }

  void routes() {
    server.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("annotator_id")) return send_error(res, 400, "annotator_id is required");
      const auto id = req.get_param_value("annotator_id");
      const auto r = store.next_task(id);
      switch (r.status) {
        case SessionStore::Status::kNotFound:
          return send_error(res, 404, "unknown annotator \"" + id + "\"");
        case SessionStore::Status::kNoContent:
          res.status = 204;
          return;
        default:
          res.status = 200;
          res.set_content(task_to_json(*r.task), "application/json");
      }
    });

    server.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
      for (const char* f : {"annotator_id", "task_id"}) {
        if (!body.contains(f) || !body[f].is_string()) {
          return send_json(res, 422, {{"error", "invalid submission"},
                                      {"errors", json::array({{{"field", f}, {"message", "required string"}}})}});
        }
      }
      if (!body.contains("payload")) {
        return send_json(res, 422, {{"error", "invalid submission"},
                                    {"errors", json::array({{{"field", "payload"}, {"message", "required"}}})}});
      }
      const auto annotator = body["annotator_id"].get<std::string>();
      const auto task = body["task_id"].get<std::string>();
      SessionStore::SubmitResult r;
      try {
        r = store.submit(annotator, task, body["payload"].dump());
      } catch (const std::exception& e) {
        return send_error(res, 500, e.what());
      }
      switch (r.status) {
        case SessionStore::Status::kOk:
          return send_json(res, 200, {{"status", "stored"}, {"task_id", task}, {"seq", r.seq}});
        case SessionStore::Status::kNotFound:
          return send_error(res, 404, r.message);
        case SessionStore::Status::kForbidden:
          return send_error(res, 403, r.message);
        default: {
          json errors = json::array();
          for (const auto& e : r.errors) errors.push_back({{"field", e.field}, {"message", e.message}});
          return send_json(res, 422, {{"error", r.message}, {"errors", errors}});
        }
      }
    });

    server.Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
      if (req.has_param("annotator_id")) {
        const auto id = req.get_param_value("annotator_id");
        const auto p = store.progress(id);
        if (!p) return send_error(res, 404, "unknown annotator \"" + id + "\"");
        json j = progress_json(*p);
        j["annotator_id"] = id;
        return send_json(res, 200, j);
      }
      json per = json::object();
      for (const auto& [id, p] : store.progress_all()) per[id] = progress_json(p);
      send_json(res, 200, {{"annotators", per}, {"global", progress_json(store.progress_global())}});
    });

    server.Get("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      if (config.admin_token.empty()) return send_error(res, 403, "export is disabled: no admin token configured");
      if (req.get_header_value("Authorization") != "Bearer " + config.admin_token) {
        return send_error(res, 401, "admin token required");
      }
      res.status = 200;
      res.set_content(format_records_jsonl(store.export_records()), "application/x-ndjson");
    });

    if (config.static_dir) {
      if (!server.set_mount_point("/", config.static_dir->string())) {
        throw Error("static directory " + config.static_dir->string() + " does not exist");
      }
    }
  }
};

AnnotationServer::AnnotationServer(SessionStore& store, ServerConfig config)
    : impl_(std::make_unique<Impl>(store, std::move(config))) {
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind() {
  auto& s = impl_->server;
  if (impl_->config.port == 0) {
    impl_->port = s.bind_to_any_port(impl_->config.host);
  } else {
    impl_->port = s.bind_to_port(impl_->config.host, impl_->config.port) ? impl_->config.port : -1;
  }
  if (impl_->port < 0) {
    throw Error("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  return impl_->port;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace emolex
