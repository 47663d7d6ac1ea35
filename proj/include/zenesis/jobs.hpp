#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "zenesis/session.hpp"

namespace zenesis {

enum class JobStatus { Queued, Running, Done, Failed };

std::string_view to_string(JobStatus s);

/// Snapshot of a Mode B job.
struct BatchJob {
  std::string job_id;
  std::string session_id;
  BatchRequest request;
  JobStatus status = JobStatus::Queued;
  std::size_t completed = 0;
  std::size_t total = 0;
  std::string error;
  std::optional<BatchOutcome> result;
};

void to_json(nlohmann::json& j, const BatchJob& job);

/// FIFO queue of batch jobs run one at a time on a dispatcher thread; each
/// job fans detection/segmentation out over `workers` threads.
class JobManager {
 public:
  explicit JobManager(std::size_t workers = std::max(1u, std::thread::hardware_concurrency()), bool autostart = true);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string submit(std::shared_ptr<Session> session, BatchRequest request);

  std::optional<BatchJob> get(const std::string& job_id) const;

  /// Queued jobs fail immediately as cancelled; running jobs stop at the next slice.
  bool cancel(const std::string& job_id);

  /// Starts the dispatcher if constructed with autostart = false.
  void start();

  /// Blocks until the job is Done or Failed.
  BatchJob wait(const std::string& job_id) const;

 private:
  struct Entry {
    BatchJob job;
    std::shared_ptr<Session> session;
    std::shared_ptr<BatchControl> control;
  };

  void run();
  BatchJob snapshot_locked(const Entry& e) const;

  std::size_t workers_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, Entry> jobs_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  std::thread dispatcher_;
};

}  // namespace zenesis
