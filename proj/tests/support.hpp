#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <algorithm>
#include <memory>

#include <unistd.h>
#include <vector>

#include "zenesis/backend.hpp"
#include "zenesis/geometry.hpp"
#include "zenesis/hitl.hpp"
#include "zenesis/volume.hpp"

namespace zt {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "zenesis") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Drifting-disk phantom: a bright disk on a noisy 16-bit background,
// moving one pixel in x per slice.
struct DiskPhantom {
  int width = 128;
  int height = 128;
  int depth = 32;
  int radius = 12;
  int start_x = 48;
  int center_y = 64;
  double background = 10000.0;
  double foreground = 40000.0;
  double sigma = 1500.0;
  std::uint64_t seed = 7;

  int center_x(int z) const { return start_x + z; }

  bool inside(int x, int y, int z) const {
    const long dx = x - center_x(z);
    const long dy = y - center_y;
    return dx * dx + dy * dy <= long{radius} * radius;
  }

  zenesis::Volume volume() const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<std::uint16_t> px(static_cast<std::size_t>(width) * height * depth);
    std::size_t i = 0;
    for (int z = 0; z < depth; ++z) {
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double v = (inside(x, y, z) ? foreground : background) + noise(rng);
          px[i++] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
        }
      }
    }
    return zenesis::Volume(width, height, depth, 1, std::move(px), "phantom.tif");
  }

  zenesis::Mask truth(int z) const {
    zenesis::Mask m(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) m.set(x, y, inside(x, y, z));
    }
    return m;
  }

  std::vector<zenesis::Mask> truths() const {
    std::vector<zenesis::Mask> out;
    for (int z = 0; z < depth; ++z) out.push_back(truth(z));
    return out;
  }

  zenesis::BBox truth_box(int z) const {
    return {center_x(z) - radius, center_y - radius, center_x(z) + radius + 1, center_y + radius + 1};
  }
};

/// Detector failure on selected slices: detection sees an all-black frame,
/// segmentation passes through untouched.
class BlindDetector final : public zenesis::SegBackend {
 public:
  BlindDetector(std::shared_ptr<zenesis::SegBackend> inner, std::vector<int> blind_slices)
      : inner_(std::move(inner)), blind_(std::move(blind_slices)) {}

  std::vector<zenesis::Detection> detect(const zenesis::Image8& image, std::string_view prompt,
                                         const zenesis::Thresholds& th) override {
    if (std::find(blind_.begin(), blind_.end(), image.provenance().slice_index) != blind_.end()) {
      const zenesis::Image8 black(image.width(), image.height(),
                                  std::vector<std::uint8_t>(image.rgb().size(), 0), image.provenance());
      return inner_->detect(black, prompt, th);
    }
    return inner_->detect(image, prompt, th);
  }

  zenesis::Mask segment(const zenesis::Image8& image, const zenesis::BBox& box) override {
    return inner_->segment(image, box);
  }

 private:
  std::shared_ptr<zenesis::SegBackend> inner_;
  std::vector<int> blind_;
};

inline zenesis::Mask random_mask(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> density(0.0, 1.0);
  std::bernoulli_distribution bit(density(rng));
  zenesis::Mask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  }
  return m;
}

// Nearest segment by rasterising both boxes and counting pixels.
inline std::uint64_t nearest_segment_oracle(const zenesis::BBox& cand, const std::vector<zenesis::Segment>& segs,
                                            int w, int h) {
  std::size_t best = 0;
  long long best_i = -1, best_u = 1;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    int bx0 = w, by0 = h, bx1 = -1, by1 = -1;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!segs[k].mask.at(x, y)) continue;
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
    long long inter = 0, uni = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool a = x >= cand.x0 && x < cand.x1 && y >= cand.y0 && y < cand.y1;
        const bool b = x >= bx0 && x <= bx1 && y >= by0 && y <= by1;
        inter += a && b;
        uni += a || b;
      }
    }
    if (uni == 0) uni = 1;
    if (best_i < 0) {
      best = k;
      best_i = inter;
      best_u = uni;
      continue;
    }
    const long long lhs = inter * best_u, rhs = best_i * uni;
    const auto area = segs[k].mask.area(), best_area = segs[best].mask.area();
    if (lhs > rhs || (lhs == rhs && (area < best_area || (area == best_area && segs[k].id < segs[best].id)))) {
      best = k;
      best_i = inter;
      best_u = uni;
    }
  }
  return segs[best].id;
}

}  // namespace zt
