#include "zenesis/baselines.hpp"

#include <algorithm>

#include <boost/multiprecision/cpp_int.hpp>

#include "zenesis/error.hpp"

namespace zenesis {

std::uint64_t Histogram256::total() const noexcept {
  std::uint64_t n = 0;
  for (const auto c : counts) n += c;
  return n;
}

Histogram256 gray_histogram(const Image8& image) {
  Histogram256 h;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      ++h.counts[image.gray(x, y)];
    }
  }
  return h;
}

int otsu_threshold(const Histogram256& histogram) {
  using boost::multiprecision::cpp_int;

  const std::uint64_t total = histogram.total();
  if (total == 0) {
    throw Error(Errc::EmptyHistogram, "histogram has no samples");
  }
  cpp_int sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += cpp_int(histogram.counts[i]) * i;

  // sigma_b^2(t) * N^2 = D^2 / (n0 * n1) with D = s0 * N - S * n0.
  // Track the best as an exact fraction num / den.
  int best_t = 0;
  cpp_int best_num = 0;
  cpp_int best_den = 1;
  std::uint64_t n0 = 0;
  cpp_int s0 = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += histogram.counts[t];
    s0 += cpp_int(histogram.counts[t]) * t;
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const cpp_int d = s0 * total - sum_all * n0;
    const cpp_int num = d * d;
    const cpp_int den = cpp_int(n0) * n1;
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  return best_t;
}

int otsu_foreground_level(const Histogram256& histogram) {
  const int t = otsu_threshold(histogram);
  const auto occupied = std::count_if(histogram.counts.begin(), histogram.counts.end(), [](auto c) { return c > 0; });
  return occupied < 2 ? 256 : t + 1;
}

Mask otsu_segment(const Image8& image) {
  const int level = otsu_foreground_level(gray_histogram(image));
  Mask mask(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      mask.set(x, y, image.gray(x, y) >= level);
    }
  }
  return mask;
}

SegmentationRecord ungrounded_segment(SegBackend& backend, const Image8& image) {
  const BBox full{0, 0, image.width(), image.height()};
  SegmentationRecord record;
  record.slice_index = image.provenance().slice_index;
  record.box = full;
  record.mask = segment_in_box(backend, image, full);
  record.provenance = Provenance::Auto;
  return record;
}

}  // namespace zenesis
