#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zenesis/geometry.hpp"

namespace zenesis {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Throws DimensionMismatch unless both masks share a frame.
Confusion confusion(const Mask& pred, const Mask& gt);

struct MetricOptions {
  /// Score IoU/Dice of an empty prediction against empty ground truth as 1
  /// (otherwise 0).
  bool empty_as_one = true;
};

double accuracy(const Confusion& c);
double iou(const Confusion& c, const MetricOptions& opts = {});
double dice(const Confusion& c, const MetricOptions& opts = {});

struct SliceMetrics {
  int slice_index = 0;
  double accuracy = 0.0;
  double iou = 0.0;
  double dice = 0.0;

  friend bool operator==(const SliceMetrics&, const SliceMetrics&) = default;
};

SliceMetrics slice_metrics(int slice_index, const Confusion& c, const MetricOptions& opts = {});

/// Mean and sample (n-1) standard deviation; std is 0 for a single sample.
struct Summary {
  double mean = 0.0;
  double std = 0.0;

  friend bool operator==(const Summary&, const Summary&) = default;
};

struct MetricsReport {
  std::vector<SliceMetrics> per_slice;
  Summary accuracy;
  Summary iou;
  Summary dice;
  std::size_t sample_count = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Throws EmptyInput. The aggregate does not depend on input order.
MetricsReport aggregate(std::span<const SliceMetrics> slices);

/// Pairs masks by position. Throws CountMismatch, or DimensionMismatch naming the slice.
MetricsReport evaluate_masks(std::span<const Mask> pred, std::span<const Mask> gt, const MetricOptions& opts = {});

/// pred and gt are each a mask stack file or a directory of mask files.
MetricsReport evaluate_pair_set(const std::filesystem::path& pred, const std::filesystem::path& gt,
                                const MetricOptions& opts = {});

void to_json(nlohmann::json& j, const MetricsReport& report);
void from_json(const nlohmann::json& j, MetricsReport& report);

/// slice,accuracy,iou,dice rows at 6 decimals, then "mean" and "std" rows.
std::string to_csv(const MetricsReport& report);

}  // namespace zenesis
