#include "zenesis/refine.hpp"

#include <algorithm>
#include <cmath>

#include "zenesis/error.hpp"

namespace zenesis {

void RefineConfig::validate() const {
  if (!(min_history >= 1 && window >= min_history)) {
    throw Error(Errc::InvalidArgument, "refinement needs window >= min_history >= 1");
  }
  if (!(size_factor > 1.0) || !std::isfinite(size_factor)) {
    throw Error(Errc::InvalidArgument, "refinement size factor must be > 1");
  }
}

void to_json(nlohmann::json& j, const RefineConfig& cfg) {
  j = nlohmann::json{{"window", cfg.window}, {"factor", cfg.size_factor}, {"min_history", cfg.min_history}};
}

void from_json(const nlohmann::json& j, RefineConfig& cfg) {
  cfg = RefineConfig{};
  cfg.window = j.value("window", cfg.window);
  cfg.size_factor = j.value("factor", cfg.size_factor);
  cfg.min_history = j.value("min_history", cfg.min_history);
}

BoxStats window_stats(std::span<const BBox> history, const RefineConfig& cfg) {
  if (history.empty()) {
    throw Error(Errc::EmptyHistory, "no accepted boxes to average");
  }
  const std::size_t n = std::min(history.size(), static_cast<std::size_t>(std::max(cfg.window, 1)));
  const auto recent = history.subspan(history.size() - n);
  BoxStats s;
  for (const auto& b : recent) {
    s.mean_w += b.width();
    s.mean_h += b.height();
    s.mean_cx += b.center_x();
    s.mean_cy += b.center_y();
  }
  const double k = static_cast<double>(n);
  s.mean_w /= k;
  s.mean_h /= k;
  s.mean_cx /= k;
  s.mean_cy /= k;
  return s;
}

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::pair<int, int> span_in_frame(int center, int size, int frame) {
  size = std::clamp(size, 1, std::max(frame, 1));
  int lo = center - size / 2;
  int hi = lo + size;
  lo = std::max(lo, 0);
  hi = std::min(hi, frame);
  if (hi <= lo) {
    lo = std::clamp(lo, 0, frame - 1);
    hi = lo + 1;
  }
  return {lo, hi};
}

}  // namespace

BBox average_box(const BoxStats& stats, int frame_width, int frame_height) {
  const auto [x0, x1] = span_in_frame(round_half_up(stats.mean_cx), round_half_up(stats.mean_w), frame_width);
  const auto [y0, y1] = span_in_frame(round_half_up(stats.mean_cy), round_half_up(stats.mean_h), frame_height);
  return {x0, y0, x1, y1};
}

RefinedBox refine_box(const std::optional<Detection>& current, const BoxStats& stats, const RefineConfig& cfg,
                      int frame_width, int frame_height) {
  const bool outlier = !current || current->box.width() > cfg.size_factor * stats.mean_w ||
                       current->box.height() > cfg.size_factor * stats.mean_h;
  if (outlier) {
    return {average_box(stats, frame_width, frame_height), true};
  }
  return {current->box, false};
}

BoxRefiner::BoxRefiner(RefineConfig cfg, int frame_width, int frame_height)
    : cfg_(cfg), width_(frame_width), height_(frame_height) {
  cfg_.validate();
}

void BoxRefiner::push(const BBox& box) {
  history_.push_back(box);
  ++accepted_;
  while (history_.size() > static_cast<std::size_t>(cfg_.window)) history_.pop_front();
}

std::optional<RefinedBox> BoxRefiner::step(const std::optional<Detection>& detection) {
  if (accepted_ < static_cast<std::size_t>(cfg_.min_history)) {
    if (!detection) return std::nullopt;
    push(detection->box);
    return RefinedBox{detection->box, false};
  }
  const std::vector<BBox> window(history_.begin(), history_.end());
  const RefinedBox out = refine_box(detection, window_stats(window, cfg_), cfg_, width_, height_);
  push(out.box);
  return out;
}

RefinedBox BoxRefiner::accept(const BBox& box) {
  push(box);
  return {box, false};
}

std::vector<std::optional<RefinedBox>> refine_sequence(std::span<const std::optional<Detection>> detections,
                                                       const RefineConfig& cfg, int frame_width, int frame_height) {
  BoxRefiner refiner(cfg, frame_width, frame_height);
  std::vector<std::optional<RefinedBox>> out;
  out.reserve(detections.size());
  for (const auto& d : detections) out.push_back(refiner.step(d));
  return out;
}

}  // namespace zenesis
