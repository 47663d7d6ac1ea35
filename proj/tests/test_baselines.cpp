#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "zenesis/backend.hpp"
#include "zenesis/baselines.hpp"
#include "zenesis/error.hpp"

using namespace zenesis;

namespace {

Image8 from_gray(int w, int h, const std::vector<std::uint8_t>& g) {
  std::vector<std::uint8_t> rgb;
  for (const auto v : g) rgb.insert(rgb.end(), {v, v, v});
  return Image8(w, h, rgb);
}

Histogram256 hist_of(const std::array<std::uint64_t, 256>& c) {
  Histogram256 h;
  h.counts = c;
  return h;
}

}  // namespace

TEST_CASE("otsu on two values picks the lower value") {
  std::array<std::uint64_t, 256> c{};
  c[10] = 500;
  c[200] = 500;
  CHECK(otsu_threshold(hist_of(c)) == 10);
  CHECK(zt::otsu_oracle(c) == 10);
}

TEST_CASE("otsu degenerate and empty histograms") {
  std::array<std::uint64_t, 256> c{};
  c[77] = 9;
  CHECK(otsu_threshold(hist_of(c)) == 0);
  CHECK_THROWS_AS(otsu_threshold(Histogram256{}), Error);
}

TEST_CASE("otsu matches the exhaustive rational scan") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    std::array<std::uint64_t, 256> c{};
    const int bins = 1 + static_cast<int>(rng() % 12);
    for (int b = 0; b < bins; ++b) c[rng() % 256] += 1 + rng() % 1000;
    REQUIRE(otsu_threshold(hist_of(c)) == zt::otsu_oracle(c));
    auto scaled = c;
    for (auto& v : scaled) v *= 7;
    REQUIRE(otsu_threshold(hist_of(scaled)) == otsu_threshold(hist_of(c)));
  }
}

TEST_CASE("otsu on a bimodal mixture") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> a(60, 15), b(180, 15);
  std::vector<std::uint8_t> g;
  for (int i = 0; i < 5000; ++i) {
    g.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(a(rng)), 0L, 255L)));
    g.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(b(rng)), 0L, 255L)));
  }
  const auto h = gray_histogram(from_gray(100, 100, g));
  CHECK(h.total() == 10000);
  const int t = otsu_threshold(h);
  CHECK(t >= 100);
  CHECK(t <= 140);
  CHECK(t == zt::otsu_oracle(h.counts));
}

TEST_CASE("otsu_segment keeps pixels above the threshold") {
  CHECK(otsu_segment(from_gray(3, 3, std::vector<std::uint8_t>(9, 50))).area() == 0);

  const std::vector<std::uint8_t> two = {10, 200, 200, 10, 10, 200};
  const auto m = otsu_segment(from_gray(3, 2, two));
  for (int i = 0; i < 6; ++i) CHECK(m.bits()[i] == (two[i] == 200));

  std::mt19937_64 rng(2);
  std::vector<std::uint8_t> g(400), inv(400);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = static_cast<std::uint8_t>(rng() % 2 ? 30 + rng() % 20 : 190 + rng() % 20);
    inv[i] = static_cast<std::uint8_t>(255 - g[i]);
  }
  const auto fwd = otsu_segment(from_gray(20, 20, g));
  const auto rev = otsu_segment(from_gray(20, 20, inv));
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(fwd.bits()[i] != rev.bits()[i]);
}

TEST_CASE("ungrounded segmentation uses the whole frame") {
  SyntheticBackend backend(128);
  std::vector<std::uint8_t> half(64);
  for (int i = 0; i < 64; ++i) half[i] = (i % 8) < 4 ? 255 : 0;
  const auto img = from_gray(8, 8, half);
  const auto r = ungrounded_segment(backend, img);
  CHECK(r.provenance == Provenance::Auto);
  CHECK(r.box == BBox{0, 0, 8, 8});
  for (int i = 0; i < 64; ++i) CHECK(r.mask.bits()[i] == (half[i] == 255));
  CHECK(ungrounded_segment(backend, from_gray(4, 4, std::vector<std::uint8_t>(16, 0))).mask.area() == 0);

  const auto full = from_gray(4, 4, std::vector<std::uint8_t>(16, 255));
  const auto grounded = detect_and_segment(backend, full, "x", {});
  CHECK(ungrounded_segment(backend, full).mask == grounded.mask);
  CHECK(grounded.box == BBox{0, 0, 4, 4});
}

TEST_CASE("single-bin images have no otsu foreground") {
  Histogram256 h;
  h.counts[50] = 9;
  CHECK(otsu_foreground_level(h) == 256);
  h.counts[51] = 1;
  CHECK(otsu_foreground_level(h) == 51);
  CHECK(SyntheticBackend().detect(from_gray(4, 4, std::vector<std::uint8_t>(16, 200)), "x", {}).empty());
}
