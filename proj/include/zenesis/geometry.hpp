#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace zenesis {

/// Axis-aligned pixel box, half-open: [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::int64_t area() const noexcept {
    return width() > 0 && height() > 0 ? std::int64_t{width()} * height() : 0;
  }
  double center_x() const noexcept { return 0.5 * (x0 + x1); }
  double center_y() const noexcept { return 0.5 * (y0 + y1); }

  /// True when the box has positive area and lies inside a width x height frame.
  bool inside(int frame_width, int frame_height) const noexcept {
    return 0 <= x0 && x0 < x1 && x1 <= frame_width && 0 <= y0 && y0 < y1 && y1 <= frame_height;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

BBox intersection(const BBox& a, const BBox& b);

/// Intersection clipped to the frame; nullopt when nothing of positive area remains.
std::optional<BBox> clip_to_frame(const BBox& box, int frame_width, int frame_height);

/// Box IoU as an exact ratio (intersection area, union area).
struct AreaRatio {
  std::int64_t num = 0;
  std::int64_t den = 0;
  double value() const noexcept { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};
AreaRatio box_iou(const BBox& a, const BBox& b);

/// Binary per-pixel segmentation, row-major, one byte (0 or 1) per pixel.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);
  Mask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }

  std::size_t area() const;
  std::optional<BBox> bounding_box() const;

  /// Clears every pixel outside the box.
  void clip_to(const BBox& box);

  Mask crop(const BBox& box) const;

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Component {
  BBox box;
  /// Row-major pixel indices, ascending.
  std::vector<std::size_t> pixels;
};

/// 4-connected foreground components, ordered by their first pixel in row-major scan.
std::vector<Component> connected_components(const Mask& foreground);

}  // namespace zenesis
