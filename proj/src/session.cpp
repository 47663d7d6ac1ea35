#include "zenesis/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <random>
#include <thread>

#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"

namespace zenesis {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEventLog = "events.ndjson";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// stops further work and is rethrown after every thread has joined.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, const std::atomic<bool>& cancel, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load() && !cancel.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t count = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void to_json(nlohmann::json& j, const AdaptConfig& cfg) {
  j = nlohmann::json{{"clip_lo_percentile", cfg.clip_lo_percentile},
                     {"clip_hi_percentile", cfg.clip_hi_percentile},
                     {"scope", cfg.scope == AdaptScope::PerSlice ? "per-slice" : "per-volume"}};
}

void from_json(const nlohmann::json& j, AdaptConfig& cfg) {
  cfg = AdaptConfig{};
  cfg.clip_lo_percentile = j.value("clip_lo_percentile", cfg.clip_lo_percentile);
  cfg.clip_hi_percentile = j.value("clip_hi_percentile", cfg.clip_hi_percentile);
  const auto scope = j.value("scope", std::string("per-volume"));
  if (scope == "per-slice") {
    cfg.scope = AdaptScope::PerSlice;
  } else if (scope == "per-volume") {
    cfg.scope = AdaptScope::PerVolume;
  } else {
    throw Error(Errc::InvalidArgument, "unknown adaptation scope '" + scope + "'");
  }
}

void to_json(nlohmann::json& j, const VolumeMeta& meta) {
  j = nlohmann::json{{"width", meta.width},
                     {"height", meta.height},
                     {"depth", meta.depth},
                     {"channels", meta.channels},
                     {"bit_depth", meta.bit_depth},
                     {"sample_kind", meta.sample_kind == SampleKind::Float ? "float" : "unsigned-int"},
                     {"min", meta.min_value},
                     {"max", meta.max_value}};
}

void to_json(nlohmann::json& j, const BatchRequest& r) {
  j = nlohmann::json{{"prompt", r.prompt}, {"thresholds", r.thresholds}, {"refine", r.refine}};
}

void from_json(const nlohmann::json& j, BatchRequest& r) {
  r = BatchRequest{};
  r.prompt = j.at("prompt").get<std::string>();
  if (j.contains("thresholds")) r.thresholds = j.at("thresholds").get<Thresholds>();
  if (j.contains("refine")) r.refine = j.at("refine").get<RefineConfig>();
}

std::size_t BatchOutcome::replaced_count() const {
  return static_cast<std::size_t>(std::count_if(slices.begin(), slices.end(), [](const auto& s) { return s.replaced; }));
}

std::string random_hex_id(std::size_t bytes) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bytes; ++i) {
    const auto b = static_cast<unsigned>(rng() & 0xFF);
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction and the event log

std::shared_ptr<Session> Session::create(const fs::path& dir, const std::string& session_id,
                                         const fs::path& volume_file, const AdaptConfig& adapt,
                                         const BackendDescriptor& descriptor, std::shared_ptr<SegBackend> backend) {
  adapt.validate();
  descriptor.validate();
  std::shared_ptr<Session> s(new Session());
  s->id_ = session_id;
  s->dir_ = dir;
  s->volume_file_ = volume_file.filename().string();
  s->volume_ = std::make_shared<const Volume>(load_volume(dir / s->volume_file_));
  s->meta_ = volume_info(*s->volume_);
  s->adapt_ = adapt;
  s->descriptor_ = descriptor;
  s->backend_ = std::move(backend);
  s->log_.open(dir / kEventLog, std::ios::app);
  if (!s->log_) {
    throw Error(Errc::UnreadableFile, (dir / kEventLog).string() + ": cannot open event log");
  }
  s->append_event({{"event", "created"},
                   {"session_id", session_id},
                   {"volume_file", s->volume_file_},
                   {"adapt", adapt},
                   {"backend", descriptor}});
  return s;
}

std::shared_ptr<Session> Session::open(const fs::path& dir, std::shared_ptr<SegBackend> backend) {
  std::ifstream in(dir / kEventLog);
  if (!in) {
    throw Error(Errc::NotFound, (dir / kEventLog).string() + ": no event log");
  }
  std::vector<nlohmann::json> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception&) {
      // A torn final line from an interrupted write is dropped; anything else is corruption.
      if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(Errc::UnreadableFile, (dir / kEventLog).string() + ": corrupt event log");
      }
    }
  }
  if (events.empty() || events.front().value("event", "") != "created") {
    throw Error(Errc::UnreadableFile, (dir / kEventLog).string() + ": missing creation event");
  }
  const auto& created = events.front();
  std::shared_ptr<Session> s(new Session());
  s->id_ = created.at("session_id").get<std::string>();
  s->dir_ = dir;
  s->volume_file_ = created.at("volume_file").get<std::string>();
  s->volume_ = std::make_shared<const Volume>(load_volume(dir / s->volume_file_));
  s->meta_ = volume_info(*s->volume_);
  s->adapt_ = created.at("adapt").get<AdaptConfig>();
  s->descriptor_ = created.at("backend").get<BackendDescriptor>();
  s->backend_ = std::move(backend);
  for (const auto& e : events) s->apply_event(e);
  s->log_.open(dir / kEventLog, std::ios::app);
  return s;
}

void Session::append_event(nlohmann::json event) {
  event["at"] = utc_now();
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) {
    throw Error(Errc::UnreadableFile, "failed to append to the event log");
  }
  apply_event(event);
}

void Session::apply_event(const nlohmann::json& event) {
  std::unique_lock lock(state_mutex_);
  const std::string kind = event.value("event", "");
  const std::string at = event.value("at", "");
  if (kind == "created") {
    created_at_ = at;
  } else if (kind == "record") {
    auto record = event.at("record").get<SegmentationRecord>();
    index_[record.record_id] = records_.size();
    next_id_ = std::max(next_id_, record.record_id + 1);
    records_.push_back(std::move(record));
  } else if (kind == "batch") {
    BatchOutcome outcome;
    for (const auto& s : event.at("slices")) {
      SliceOutcome o;
      o.slice_index = s.at("slice").get<int>();
      if (!s.at("record_id").is_null()) o.record_id = s.at("record_id").get<std::uint64_t>();
      o.replaced = s.at("replaced").get<bool>();
      outcome.slices.push_back(o);
    }
    last_batch_ = std::move(outcome);
  } else if (kind == "evaluation") {
    last_evaluation_ = event.at("report").get<MetricsReport>();
  } else {
    throw Error(Errc::UnreadableFile, "unknown event '" + kind + "'");
  }
  updated_at_ = at;
}

SegmentationRecord Session::commit_record(SegmentationRecord record) {
  {
    std::shared_lock lock(state_mutex_);
    record.record_id = next_id_;
  }
  append_event({{"event", "record"}, {"record", record}});
  return record;
}

// ---------------------------------------------------------------------------
// Queries

std::string Session::created_at() const {
  std::shared_lock lock(state_mutex_);
  return created_at_;
}

std::string Session::updated_at() const {
  std::shared_lock lock(state_mutex_);
  return updated_at_;
}

const ClipBounds& Session::volume_bounds() const {
  std::call_once(bounds_once_, [this] { volume_bounds_ = compute_clip_bounds(volume_->samples(), adapt_); });
  return volume_bounds_;
}

Image8 Session::adapted_slice(int index) const {
  const RawSlice slice = slice_at(*volume_, index);
  const ClipBounds bounds =
      adapt_.scope == AdaptScope::PerVolume ? volume_bounds() : compute_clip_bounds(slice.pixels, adapt_);
  return adapt_slice(slice, bounds, ImageProvenance{volume_->source_path(), index, adapt_});
}

std::vector<std::uint8_t> Session::preview_png(int index, double scale) const {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw Error(Errc::InvalidArgument, "preview scale must lie in (0, 1]");
  }
  Image8 image = adapted_slice(index);
  if (scale < 1.0) {
    const int w = std::max(1, static_cast<int>(std::floor(image.width() * scale + 0.5)));
    const int h = std::max(1, static_cast<int>(std::floor(image.height() * scale + 0.5)));
    image = image.resize_nearest(w, h);
  }
  return encode_png(image);
}

std::vector<SegmentationRecord> Session::records() const {
  std::shared_lock lock(state_mutex_);
  return records_;
}

std::optional<SegmentationRecord> Session::record(std::uint64_t record_id) const {
  std::shared_lock lock(state_mutex_);
  const auto it = index_.find(record_id);
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

std::optional<BatchOutcome> Session::last_batch() const {
  std::shared_lock lock(state_mutex_);
  return last_batch_;
}

std::optional<MetricsReport> Session::last_evaluation() const {
  std::shared_lock lock(state_mutex_);
  return last_evaluation_;
}

const SegmentationRecord& Session::find_locked(std::uint64_t record_id) const {
  const auto it = index_.find(record_id);
  if (it == index_.end()) {
    throw Error(Errc::UnknownRecord, "no record " + std::to_string(record_id) + " in session " + id_);
  }
  return records_[it->second];
}

Image8 Session::frame_image_locked(const SegmentationRecord& record) const {
  if (!record.parent_id) {
    return adapted_slice(record.slice_index);
  }
  const SegmentationRecord& parent = find_locked(*record.parent_id);
  if (!parent.box) {
    throw Error(Errc::NoParentBox, "parent record " + std::to_string(parent.record_id) + " has no box");
  }
  return frame_image_locked(parent).crop(*parent.box);
}

std::vector<std::optional<SegmentationRecord>> Session::current_records() const {
  std::shared_lock lock(state_mutex_);
  std::vector<std::optional<SegmentationRecord>> current(static_cast<std::size_t>(volume_->depth()));
  for (const auto& r : records_) {
    if (r.parent_id || r.slice_index < 0 || r.slice_index >= volume_->depth()) continue;
    current[static_cast<std::size_t>(r.slice_index)] = r;
  }
  return current;
}

std::vector<Mask> Session::current_masks() const {
  std::vector<Mask> masks;
  for (const auto& r : current_records()) {
    masks.push_back(r ? r->mask : Mask(volume_->width(), volume_->height()));
  }
  return masks;
}

BBox Session::to_slice_frame(std::uint64_t record_id, const BBox& box) const {
  std::shared_lock lock(state_mutex_);
  const auto& rec = find_locked(record_id);
  const auto offset = slice_offset(rec, [this](std::uint64_t id) -> const SegmentationRecord* {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &records_[it->second];
  });
  return zenesis::to_slice_frame(box, offset);
}

// ---------------------------------------------------------------------------
// Mutations

SegmentationRecord Session::segment_slice(int index, const std::string& prompt, const Thresholds& th) {
  const Image8 image = adapted_slice(index);
  SegmentationRecord rec = detect_and_segment(*backend_, image, prompt, th);
  rec.slice_index = index;
  std::lock_guard write(write_mutex_);
  return commit_record(std::move(rec));
}

SegmentationRecord Session::rectify(std::uint64_t record_id, const BBox& box) {
  std::lock_guard write(write_mutex_);
  SegmentationRecord old;
  Image8 frame;
  {
    std::shared_lock lock(state_mutex_);
    old = find_locked(record_id);
    frame = frame_image_locked(old);
  }
  if (!box.inside(frame.width(), frame.height())) {
    throw Error(Errc::DegenerateBox, "rectification box must have positive area inside the " +
                                         std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                                         " frame");
  }
  SegmentationRecord rec;
  rec.slice_index = old.slice_index;
  rec.prompt = old.prompt;
  rec.box = box;
  rec.mask = segment_in_box(*backend_, frame, box);
  rec.provenance = Provenance::Rectified;
  rec.parent_id = old.parent_id;
  rec.crop_origin = old.crop_origin;
  rec.supersedes = old.record_id;
  return commit_record(std::move(rec));
}

CandidateReply Session::propose_candidates(std::uint64_t record_id, int count, std::uint64_t seed) const {
  SegmentationRecord rec;
  {
    std::shared_lock lock(state_mutex_);
    rec = find_locked(record_id);
  }
  CandidateReply reply;
  reply.candidates = propose_random_boxes(rec.mask.width(), rec.mask.height(), count, seed);
  reply.segments = segments_from_mask(rec.mask);
  if (!reply.segments.empty()) {
    for (const auto& box : reply.candidates.boxes) {
      reply.nearest.push_back(select_nearest_segment(box, reply.segments));
    }
  }
  return reply;
}

SegmentationRecord Session::further_segment(std::uint64_t record_id, const std::string& prompt,
                                            const Thresholds& th) {
  std::lock_guard write(write_mutex_);
  SegmentationRecord parent;
  Image8 frame;
  {
    std::shared_lock lock(state_mutex_);
    parent = find_locked(record_id);
    if (!parent.box || parent.box->area() == 0) {
      throw Error(Errc::NoParentBox, "record " + std::to_string(record_id) + " has no box to segment within");
    }
    frame = frame_image_locked(parent);
  }
  const Image8 crop = frame.crop(*parent.box);
  SegmentationRecord child = detect_and_segment(*backend_, crop, prompt, th);
  child.slice_index = parent.slice_index;
  child.provenance = Provenance::Further;
  child.parent_id = parent.record_id;
  child.crop_origin = CropOrigin{parent.box->x0, parent.box->y0};
  return commit_record(std::move(child));
}

BatchOutcome Session::run_batch(const BatchRequest& request, BatchControl& control) {
  if (blank(request.prompt)) {
    throw Error(Errc::EmptyPrompt, "prompt must not be empty");
  }
  request.thresholds.validate();
  request.refine.validate();

  const int depth = volume_->depth();
  const auto n = static_cast<std::size_t>(depth);
  control.total = n;
  control.completed = 0;

  // Slices whose current record was rectified keep that box.
  std::vector<std::optional<BBox>> fixed(n);
  for (const auto& cur : current_records()) {
    if (cur && cur->provenance == Provenance::Rectified && cur->box) {
      fixed[static_cast<std::size_t>(cur->slice_index)] = cur->box;
    }
  }

  std::vector<std::optional<Detection>> top(n);
  parallel_for(n, control.workers, control.cancel, [&](std::size_t i) {
    if (fixed[i]) return;
    const auto detections = backend_->detect(adapted_slice(static_cast<int>(i)), request.prompt, request.thresholds);
    if (!detections.empty()) top[i] = detections.front();
  });
  if (control.cancel) {
    throw Error(Errc::Cancelled, "batch cancelled");
  }

  BoxRefiner refiner(request.refine, volume_->width(), volume_->height());
  std::vector<std::optional<RefinedBox>> boxes(n);
  for (std::size_t i = 0; i < n; ++i) {
    boxes[i] = fixed[i] ? std::optional(refiner.accept(*fixed[i])) : refiner.step(top[i]);
  }

  std::vector<std::optional<Mask>> masks(n);
  std::exception_ptr failure;
  try {
    parallel_for(n, control.workers, control.cancel, [&](std::size_t i) {
      if (boxes[i]) {
        masks[i] = segment_in_box(*backend_, adapted_slice(static_cast<int>(i)), boxes[i]->box);
      } else {
        masks[i] = Mask(volume_->width(), volume_->height());
      }
      control.completed.fetch_add(1);
    });
  } catch (...) {
    failure = std::current_exception();
  }

  std::lock_guard write(write_mutex_);
  BatchOutcome outcome;
  for (std::size_t i = 0; i < n; ++i) {
    SliceOutcome o{static_cast<int>(i), std::nullopt, boxes[i] && boxes[i]->replaced};
    if (masks[i]) {
      SegmentationRecord rec;
      rec.slice_index = static_cast<int>(i);
      rec.prompt = request.prompt;
      rec.mask = std::move(*masks[i]);
      if (!boxes[i]) {
        rec.provenance = Provenance::AutoEmpty;
      } else {
        rec.box = boxes[i]->box;
        if (fixed[i]) {
          rec.provenance = Provenance::Rectified;
        } else if (boxes[i]->replaced) {
          rec.provenance = Provenance::Refined;
        } else {
          rec.provenance = Provenance::Auto;
          rec.score = top[i]->score;
        }
      }
      o.record_id = commit_record(std::move(rec)).record_id;
    }
    outcome.slices.push_back(o);
  }
  auto slices = nlohmann::json::array();
  for (const auto& o : outcome.slices) {
    slices.push_back({{"slice", o.slice_index},
                      {"record_id", o.record_id ? nlohmann::json(*o.record_id) : nlohmann::json(nullptr)},
                      {"replaced", o.replaced}});
  }
  append_event({{"event", "batch"}, {"request", request}, {"slices", std::move(slices)}});
  if (failure) std::rethrow_exception(failure);
  if (control.cancel) {
    throw Error(Errc::Cancelled, "batch cancelled during segmentation");
  }
  return outcome;
}

MetricsReport Session::evaluate(const fs::path& gt_source, const MetricOptions& opts) {
  const auto gt = load_mask_source(gt_source);
  const auto pred = current_masks();
  MetricsReport report = evaluate_masks(pred, gt, opts);
  std::lock_guard write(write_mutex_);
  append_event({{"event", "evaluation"}, {"gt_source", gt_source.string()}, {"report", report}});
  return report;
}

ExportManifest Session::export_results(const fs::path& out_dir) const {
  fs::create_directories(out_dir);
  ExportManifest m;
  m.directory = out_dir;
  m.masks = out_dir / "masks.tif";
  m.manifest = out_dir / "manifest.json";

  const auto current = current_records();
  std::vector<Mask> masks;
  for (const auto& r : current) masks.push_back(r ? r->mask : Mask(volume_->width(), volume_->height()));
  save_mask_stack(masks, m.masks);

  const auto batch = last_batch();
  auto slices = nlohmann::json::array();
  for (std::size_t i = 0; i < current.size(); ++i) {
    const auto& r = current[i];
    bool replaced = false;
    if (r && batch) {
      for (const auto& o : batch->slices) {
        if (o.record_id == r->record_id) replaced = o.replaced;
      }
    }
    slices.push_back({{"slice", i},
                      {"record_id", r ? nlohmann::json(r->record_id) : nlohmann::json(nullptr)},
                      {"provenance", r ? nlohmann::json(to_string(r->provenance)) : nlohmann::json(nullptr)},
                      {"box", r && r->box ? nlohmann::json(*r->box) : nlohmann::json(nullptr)},
                      {"replaced", replaced}});
  }
  auto all = nlohmann::json::array();
  for (const auto& r : records()) {
    all.push_back({{"record_id", r.record_id},
                   {"slice_index", r.slice_index},
                   {"provenance", to_string(r.provenance)},
                   {"parent_id", r.parent_id ? nlohmann::json(*r.parent_id) : nlohmann::json(nullptr)},
                   {"supersedes", r.supersedes ? nlohmann::json(*r.supersedes) : nlohmann::json(nullptr)}});
  }
  m.document = nlohmann::json{{"session_id", id_},
                              {"volume_file", volume_file_},
                              {"width", volume_->width()},
                              {"height", volume_->height()},
                              {"depth", volume_->depth()},
                              {"masks", m.masks.filename().string()},
                              {"slices", std::move(slices)},
                              {"records", std::move(all)}};
  if (const auto eval = last_evaluation()) {
    m.metrics_csv = out_dir / "metrics.csv";
    std::ofstream csv(*m.metrics_csv);
    csv << to_csv(*eval);
    m.document["metrics"] = m.metrics_csv->filename().string();
  }
  std::ofstream out(m.manifest);
  out << m.document.dump(2) << '\n';
  if (!out) {
    throw Error(Errc::UnreadableFile, m.manifest.string() + ": write failed");
  }
  return m;
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(fs::path data_dir, BackendDescriptor descriptor, std::shared_ptr<SegBackend> backend,
                           AdaptConfig adapt)
    : data_dir_(std::move(data_dir)), descriptor_(std::move(descriptor)), backend_(std::move(backend)), adapt_(adapt) {
  fs::create_directories(data_dir_ / "sessions");
  fs::create_directories(data_dir_ / "staging");
}

fs::path SessionStore::staging_path() const { return data_dir_ / "staging" / (random_hex_id() + ".part"); }

std::shared_ptr<Session> SessionStore::create_from_file(const fs::path& uploaded, const std::string& filename) {
  std::string name;
  for (const char c : fs::path(filename).filename().string()) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-') name += c;
  }
  if (name.empty() || name == "." || name == ".." || name == kEventLog) name = "upload";

  const std::string id = random_hex_id();
  const fs::path dir = data_dir_ / "sessions" / id;
  fs::create_directories(dir);
  try {
    std::error_code ec;
    fs::rename(uploaded, dir / name, ec);
    if (ec) {
      fs::copy_file(uploaded, dir / name);
      fs::remove(uploaded);
    }
    auto session = Session::create(dir, id, name, adapt_, descriptor_, backend_);
    std::unique_lock lock(mutex_);
    sessions_[id] = session;
    return session;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
}

std::shared_ptr<Session> SessionStore::get(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionStore::load_existing() {
  std::size_t loaded = 0;
  for (const auto& entry : fs::directory_iterator(data_dir_ / "sessions")) {
    if (!entry.is_directory()) continue;
    try {
      auto session = Session::open(entry.path(), backend_);
      std::unique_lock lock(mutex_);
      sessions_[session->id()] = session;
      ++loaded;
    } catch (const std::exception&) {
      // Unreadable session directories are left on disk untouched.
    }
  }
  return loaded;
}

}  // namespace zenesis
