#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenesis/adapt.hpp"
#include "zenesis/backend.hpp"
#include "zenesis/hitl.hpp"
#include "zenesis/metrics.hpp"
#include "zenesis/record.hpp"
#include "zenesis/refine.hpp"
#include "zenesis/volume.hpp"

namespace zenesis {

struct BatchRequest {
  std::string prompt;
  Thresholds thresholds;
  RefineConfig refine;
};

void to_json(nlohmann::json& j, const BatchRequest& r);
void from_json(const nlohmann::json& j, BatchRequest& r);

struct SliceOutcome {
  int slice_index = 0;
  std::optional<std::uint64_t> record_id;
  bool replaced = false;

  friend bool operator==(const SliceOutcome&, const SliceOutcome&) = default;
};

struct BatchOutcome {
  std::vector<SliceOutcome> slices;
  std::size_t replaced_count() const;
};

/// Shared between a running batch and its observers.
struct BatchControl {
  std::atomic<bool> cancel{false};
  std::atomic<std::size_t> completed{0};
  std::atomic<std::size_t> total{0};
  std::size_t workers = 1;
};

struct CandidateReply {
  CandidateSet candidates;
  std::vector<Segment> segments;
  /// Per candidate, the id of the nearest segment; empty when there are no segments.
  std::vector<std::uint64_t> nearest;
};

struct ExportManifest {
  std::filesystem::path directory;
  std::filesystem::path masks;
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> metrics_csv;
  nlohmann::json document;
};

/// One uploaded volume and everything done to it.
///
/// State lives in a directory holding the upload and an append-only,
/// newline-delimited JSON event log; open() replays the log. Mutations are
/// serialized per session, reads may run concurrently.
class Session {
 public:
  static std::shared_ptr<Session> create(const std::filesystem::path& dir, const std::string& session_id,
                                         const std::filesystem::path& volume_file, const AdaptConfig& adapt,
                                         const BackendDescriptor& descriptor, std::shared_ptr<SegBackend> backend);

  static std::shared_ptr<Session> open(const std::filesystem::path& dir, std::shared_ptr<SegBackend> backend);

  const std::string& id() const noexcept { return id_; }
  const std::filesystem::path& directory() const noexcept { return dir_; }
  const Volume& volume() const noexcept { return *volume_; }
  const VolumeMeta& meta() const noexcept { return meta_; }
  const AdaptConfig& adapt_config() const noexcept { return adapt_; }
  const BackendDescriptor& backend_descriptor() const noexcept { return descriptor_; }
  std::string created_at() const;
  std::string updated_at() const;

  Image8 adapted_slice(int index) const;

  /// PNG of the adapted slice, nearest-neighbour downscaled by scale in (0, 1].
  std::vector<std::uint8_t> preview_png(int index, double scale) const;

  /// Mode A: grounded segmentation of one slice.
  SegmentationRecord segment_slice(int index, const std::string& prompt, const Thresholds& th);

  /// Mode B: detect every slice, refine boxes in slice order, then segment.
  /// Slices rectified earlier keep their rectified box. Records are appended
  /// in slice order. Throws on backend failure after keeping finished records.
  BatchOutcome run_batch(const BatchRequest& request, BatchControl& control);

  /// Re-segments the record's frame with a user-chosen box. The old record is kept.
  SegmentationRecord rectify(std::uint64_t record_id, const BBox& box);

  CandidateReply propose_candidates(std::uint64_t record_id, int count, std::uint64_t seed) const;

  /// Grounded segmentation inside the parent's box, stored as a child record.
  SegmentationRecord further_segment(std::uint64_t record_id, const std::string& prompt, const Thresholds& th);

  /// Mode C against the current per-slice masks.
  MetricsReport evaluate(const std::filesystem::path& gt_source, const MetricOptions& opts = {});

  ExportManifest export_results(const std::filesystem::path& out_dir) const;

  std::vector<SegmentationRecord> records() const;
  std::optional<SegmentationRecord> record(std::uint64_t record_id) const;
  std::optional<BatchOutcome> last_batch() const;
  std::optional<MetricsReport> last_evaluation() const;

  /// Latest top-level record per slice (nullopt where none exists).
  std::vector<std::optional<SegmentationRecord>> current_records() const;
  std::vector<Mask> current_masks() const;

  /// Box in a child's frame mapped to slice coordinates. Throws NotAChild.
  BBox to_slice_frame(std::uint64_t record_id, const BBox& box) const;

 private:
  Session() = default;

  void append_event(nlohmann::json event);
  void apply_event(const nlohmann::json& event);
  SegmentationRecord commit_record(SegmentationRecord record);
  const SegmentationRecord& find_locked(std::uint64_t record_id) const;
  Image8 frame_image_locked(const SegmentationRecord& record) const;
  const ClipBounds& volume_bounds() const;

  std::string id_;
  std::filesystem::path dir_;
  std::string volume_file_;
  std::shared_ptr<const Volume> volume_;
  VolumeMeta meta_;
  AdaptConfig adapt_;
  BackendDescriptor descriptor_;
  std::shared_ptr<SegBackend> backend_;
  std::string created_at_;
  std::string updated_at_;

  mutable std::once_flag bounds_once_;
  mutable ClipBounds volume_bounds_;

  std::mutex write_mutex_;
  mutable std::shared_mutex state_mutex_;
  std::vector<SegmentationRecord> records_;
  std::map<std::uint64_t, std::size_t> index_;
  std::uint64_t next_id_ = 1;
  std::optional<BatchOutcome> last_batch_;
  std::optional<MetricsReport> last_evaluation_;
  std::ofstream log_;
};

/// All sessions under <data_dir>/sessions, keyed by id.
class SessionStore {
 public:
  SessionStore(std::filesystem::path data_dir, BackendDescriptor descriptor, std::shared_ptr<SegBackend> backend,
               AdaptConfig adapt = {});

  /// Takes ownership of an uploaded file (moved into the session directory).
  std::shared_ptr<Session> create_from_file(const std::filesystem::path& uploaded, const std::string& filename);

  std::shared_ptr<Session> get(const std::string& session_id) const;

  /// Replays every session directory found on disk; returns how many loaded.
  std::size_t load_existing();

  std::filesystem::path staging_path() const;

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

 private:
  std::filesystem::path data_dir_;
  BackendDescriptor descriptor_;
  std::shared_ptr<SegBackend> backend_;
  AdaptConfig adapt_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

void to_json(nlohmann::json& j, const AdaptConfig& cfg);
void from_json(const nlohmann::json& j, AdaptConfig& cfg);
void to_json(nlohmann::json& j, const VolumeMeta& meta);

std::string random_hex_id(std::size_t bytes = 8);

}  // namespace zenesis
