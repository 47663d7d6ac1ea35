#pragma once

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "zenesis/backend.hpp"
#include "zenesis/geometry.hpp"

namespace zenesis {

struct RefineConfig {
  int window = 5;
  double size_factor = 1.5;
  int min_history = 3;

  /// Requires window >= min_history >= 1 and size_factor > 1.
  void validate() const;

  friend bool operator==(const RefineConfig&, const RefineConfig&) = default;
};

void to_json(nlohmann::json& j, const RefineConfig& cfg);
void from_json(const nlohmann::json& j, RefineConfig& cfg);

struct BoxStats {
  double mean_w = 0.0;
  double mean_h = 0.0;
  double mean_cx = 0.0;
  double mean_cy = 0.0;
};

struct RefinedBox {
  BBox box;
  bool replaced = false;

  friend bool operator==(const RefinedBox&, const RefinedBox&) = default;
};

/// Means over the most recent min(window, size) accepted boxes. Throws EmptyHistory.
BoxStats window_stats(std::span<const BBox> history, const RefineConfig& cfg);

/// The window's average box: rounded mean size centred on the rounded mean
/// centre, clipped to the frame with at least one pixel per side.
BBox average_box(const BoxStats& stats, int frame_width, int frame_height);

/// Keeps the detection unless it is missing or wider/taller than
/// size_factor times the window mean (strictly), in which case the average
/// box replaces it.
RefinedBox refine_box(const std::optional<Detection>& current, const BoxStats& stats, const RefineConfig& cfg,
                      int frame_width, int frame_height);

/// Ordered, stateful pass over a slice sequence.
///
/// Until min_history boxes have been accepted, present detections are taken
/// as-is and absent ones yield nothing. Afterwards each slice goes through
/// refine_box(). Every emitted box, replacements included, joins the history.
class BoxRefiner {
 public:
  BoxRefiner(RefineConfig cfg, int frame_width, int frame_height);

  std::optional<RefinedBox> step(const std::optional<Detection>& detection);

  /// A user-fixed box for this slice; accepted unconditionally.
  RefinedBox accept(const BBox& box);

  const std::deque<BBox>& history() const noexcept { return history_; }

 private:
  void push(const BBox& box);

  RefineConfig cfg_;
  int width_;
  int height_;
  std::size_t accepted_ = 0;
  std::deque<BBox> history_;
};

std::vector<std::optional<RefinedBox>> refine_sequence(std::span<const std::optional<Detection>> detections,
                                                       const RefineConfig& cfg, int frame_width, int frame_height);

}  // namespace zenesis
