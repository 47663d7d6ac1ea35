#include "zenesis/jobs.hpp"

#include "zenesis/error.hpp"

namespace zenesis {

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "queued";
}

void to_json(nlohmann::json& j, const BatchJob& job) {
  j = nlohmann::json{{"job_id", job.job_id},
                     {"session_id", job.session_id},
                     {"request", job.request},
                     {"status", to_string(job.status)},
                     {"progress", {{"completed", job.completed}, {"total", job.total}}},
                     {"error", job.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(job.error)}};
  if (job.result) {
    auto slices = nlohmann::json::array();
    for (const auto& s : job.result->slices) {
      slices.push_back({{"slice", s.slice_index},
                        {"record_id", s.record_id ? nlohmann::json(*s.record_id) : nlohmann::json(nullptr)},
                        {"replaced", s.replaced}});
    }
    j["result"] = {{"slices", std::move(slices)}, {"replaced_count", job.result->replaced_count()}};
  } else {
    j["result"] = nullptr;
  }
}

JobManager::JobManager(std::size_t workers, bool autostart) : workers_(std::max<std::size_t>(workers, 1)) {
  if (autostart) start();
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    for (auto& [id, e] : jobs_) e.control->cancel = true;
  }
  changed_.notify_all();
  if (dispatcher_.joinable()) dispatcher_.join();
}

void JobManager::start() {
  std::lock_guard lock(mutex_);
  if (!dispatcher_.joinable()) dispatcher_ = std::thread([this] { run(); });
}

std::string JobManager::submit(std::shared_ptr<Session> session, BatchRequest request) {
  if (!session) {
    throw Error(Errc::NotFound, "no such session");
  }
  std::lock_guard lock(mutex_);
  std::string id = random_hex_id();
  while (jobs_.count(id)) id = random_hex_id();
  Entry e;
  e.job.job_id = id;
  e.job.session_id = session->id();
  e.job.request = std::move(request);
  e.job.total = static_cast<std::size_t>(session->volume().depth());
  e.session = std::move(session);
  e.control = std::make_shared<BatchControl>();
  e.control->workers = workers_;
  jobs_.emplace(id, std::move(e));
  queue_.push_back(id);
  changed_.notify_all();
  return id;
}

BatchJob JobManager::snapshot_locked(const Entry& e) const {
  BatchJob job = e.job;
  if (job.status == JobStatus::Running) {
    job.completed = std::max(job.completed, e.control->completed.load());
  }
  return job;
}

std::optional<BatchJob> JobManager::get(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return snapshot_locked(it->second);
}

bool JobManager::cancel(const std::string& job_id) {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return false;
  auto& e = it->second;
  if (e.job.status == JobStatus::Queued) {
    std::erase(queue_, job_id);
    e.job.status = JobStatus::Failed;
    e.job.error = "cancelled";
    changed_.notify_all();
    return true;
  }
  if (e.job.status == JobStatus::Running) {
    e.control->cancel = true;
    return true;
  }
  return false;
}

BatchJob JobManager::wait(const std::string& job_id) const {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) {
    throw Error(Errc::NotFound, "no job " + job_id);
  }
  changed_.wait(lock, [&] {
    const auto s = it->second.job.status;
    return s == JobStatus::Done || s == JobStatus::Failed;
  });
  return snapshot_locked(it->second);
}

void JobManager::run() {
  for (;;) {
    std::string id;
    std::shared_ptr<Session> session;
    std::shared_ptr<BatchControl> control;
    BatchRequest request;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      auto& e = jobs_.at(id);
      e.job.status = JobStatus::Running;
      session = e.session;
      control = e.control;
      request = e.job.request;
    }
    changed_.notify_all();

    std::optional<BatchOutcome> outcome;
    std::string error;
    try {
      outcome = session->run_batch(request, *control);
    } catch (const std::exception& ex) {
      error = ex.what();
    }

    {
      std::lock_guard lock(mutex_);
      auto& e = jobs_.at(id);
      e.job.completed = control->completed.load();
      e.job.total = control->total.load();
      if (outcome) {
        e.job.status = JobStatus::Done;
        e.job.result = std::move(outcome);
      } else {
        e.job.status = JobStatus::Failed;
        e.job.error = error;
      }
    }
    changed_.notify_all();
  }
}

}  // namespace zenesis
