#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zenesis/adapt.hpp"
#include "zenesis/geometry.hpp"
#include "zenesis/record.hpp"

namespace zenesis {

struct Thresholds {
  double box_threshold = 0.35;
  double text_threshold = 0.25;

  void validate() const;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct Detection {
  BBox box;
  double score = 0.0;
  std::string phrase;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Score-descending, ties by (y0, x0) ascending.
void sort_detections(std::vector<Detection>& detections);

/// Prompt-conditioned detector plus box-promptable segmenter.
///
/// Implementations are stateless per call and may be invoked concurrently.
class SegBackend {
 public:
  virtual ~SegBackend() = default;

  /// Detections with score >= box_threshold, score-descending, ties by (y0, x0).
  virtual std::vector<Detection> detect(const Image8& image, std::string_view prompt, const Thresholds& th) = 0;

  /// Mask in the image frame. Callers should go through segment_in_box(), which
  /// enforces the box contract for every implementation.
  virtual Mask segment(const Image8& image, const BBox& box) = 0;
};

/// Deterministic stand-in for the foundation models.
///
/// Foreground is gray >= threshold. With no explicit threshold the Otsu level
/// level of the image is used (otsu_foreground_level), matching otsu_segment().
/// detect() reports one box per 4-connected foreground component of at least
/// kMinComponentPixels pixels, scored by its mean gray level / 255.
class SyntheticBackend final : public SegBackend {
 public:
  static constexpr std::size_t kMinComponentPixels = 9;

  explicit SyntheticBackend(std::optional<int> threshold = std::nullopt);

  std::vector<Detection> detect(const Image8& image, std::string_view prompt, const Thresholds& th) override;
  Mask segment(const Image8& image, const BBox& box) override;

  /// Smallest gray level counted as foreground for this image.
  int foreground_level(const Image8& image) const;

 private:
  std::optional<int> threshold_;
};

struct RemoteOptions {
  std::size_t max_in_flight = 4;
  std::chrono::seconds timeout{120};
};

struct BackendDescriptor {
  enum class Kind { Synthetic, Remote };

  Kind kind = Kind::Synthetic;
  std::optional<std::string> remote_url;
  std::optional<int> synthetic_threshold;

  void validate() const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

void to_json(nlohmann::json& j, const BackendDescriptor& d);
void from_json(const nlohmann::json& j, BackendDescriptor& d);
void to_json(nlohmann::json& j, const Thresholds& th);
void from_json(const nlohmann::json& j, Thresholds& th);

std::shared_ptr<SegBackend> make_backend(const BackendDescriptor& descriptor, const RemoteOptions& options = {});

/// Clips the box to the frame (DegenerateBox when nothing is left), segments,
/// then clears any bits outside the box.
Mask segment_in_box(SegBackend& backend, const Image8& image, const BBox& box);

/// Top-1 grounded segmentation of one frame. Provenance is Auto, or AutoEmpty
/// with an empty mask when nothing is detected. Record id and slice are left
/// for the caller to assign.
SegmentationRecord detect_and_segment(SegBackend& backend, const Image8& image, std::string_view prompt,
                                      const Thresholds& th);

}  // namespace zenesis
