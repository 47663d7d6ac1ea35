#include "zenesis/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "zenesis/error.hpp"

namespace zenesis {

BBox intersection(const BBox& a, const BBox& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
}

std::optional<BBox> clip_to_frame(const BBox& box, int frame_width, int frame_height) {
  const BBox clipped = intersection(box, BBox{0, 0, frame_width, frame_height});
  if (clipped.area() == 0) return std::nullopt;
  return clipped;
}

AreaRatio box_iou(const BBox& a, const BBox& b) {
  const std::int64_t inter = intersection(a, b).area();
  return {inter, a.area() + b.area() - inter};
}

Mask::Mask(int width, int height)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {
  if (width < 0 || height < 0) {
    throw Error(Errc::InvalidArgument, "negative mask dimensions");
  }
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 0 || height < 0 || bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(Errc::DimensionMismatch, "mask buffer does not match dimensions");
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t Mask::area() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::optional<BBox> Mask::bounding_box() const {
  BBox box{width_, height_, 0, 0};
  bool any = false;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (bits_[index(x, y)]) {
        any = true;
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x + 1);
        box.y1 = std::max(box.y1, y + 1);
      }
    }
  }
  if (!any) return std::nullopt;
  return box;
}

void Mask::clip_to(const BBox& box) {
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (x < box.x0 || x >= box.x1 || y < box.y0 || y >= box.y1) {
        bits_[index(x, y)] = 0;
      }
    }
  }
}

Mask Mask::crop(const BBox& box) const {
  if (!box.inside(width_, height_)) {
    throw Error(Errc::DegenerateBox, "crop box outside mask frame");
  }
  Mask out(box.width(), box.height());
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      out.set(x - box.x0, y - box.y0, at(x, y));
    }
  }
  return out;
}

std::vector<Component> connected_components(const Mask& foreground) {
  const int w = foreground.width();
  const int h = foreground.height();
  const auto bits = foreground.bits();
  std::vector<std::uint8_t> seen(bits.size(), 0);
  std::vector<Component> components;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < bits.size(); ++start) {
    if (!bits[start] || seen[start]) continue;
    Component comp;
    comp.box = {w, h, 0, 0};
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comp.pixels.push_back(i);
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      comp.box.x0 = std::min(comp.box.x0, x);
      comp.box.y0 = std::min(comp.box.y0, y);
      comp.box.x1 = std::max(comp.box.x1, x + 1);
      comp.box.y1 = std::max(comp.box.y1, y + 1);
      auto visit = [&](std::size_t j) {
        if (bits[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    components.push_back(std::move(comp));
  }
  return components;
}

}  // namespace zenesis
