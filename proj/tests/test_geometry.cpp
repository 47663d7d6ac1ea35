#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "zenesis/base64.hpp"
#include "zenesis/error.hpp"
#include "zenesis/geometry.hpp"
#include "zenesis/rle.hpp"

using namespace zenesis;

TEST_CASE("box arithmetic") {
  const BBox a{0, 0, 10, 10};
  const BBox b{5, 5, 15, 20};
  CHECK(a.area() == 100);
  CHECK(intersection(a, b) == BBox{5, 5, 10, 10});
  const auto r = box_iou(a, b);
  CHECK(r.num == 25);
  CHECK(r.den == 100 + 150 - 25);
  CHECK(box_iou(a, BBox{20, 20, 30, 30}).num == 0);
  CHECK(clip_to_frame(BBox{-5, -5, 5, 5}, 8, 8) == BBox{0, 0, 5, 5});
  CHECK_FALSE(clip_to_frame(BBox{8, 0, 12, 4}, 8, 8));
  CHECK(BBox{0, 0, 8, 8}.inside(8, 8));
  CHECK_FALSE(BBox{0, 0, 9, 8}.inside(8, 8));
  CHECK_FALSE(BBox{3, 3, 3, 5}.inside(8, 8));
}

TEST_CASE("mask basics") {
  Mask m(6, 4);
  CHECK(m.area() == 0);
  CHECK_FALSE(m.bounding_box());
  m.set(1, 1, true);
  m.set(4, 2, true);
  CHECK(m.area() == 2);
  CHECK(m.bounding_box() == BBox{1, 1, 5, 3});
  auto clipped = m;
  clipped.clip_to({0, 0, 3, 4});
  CHECK(clipped.area() == 1);
  const auto c = m.crop({1, 1, 5, 3});
  CHECK(c.width() == 4);
  CHECK(c.at(0, 0));
  CHECK(c.at(3, 1));
  CHECK(Mask(2, 1, {0, 7}).bits()[1] == 1);
}

TEST_CASE("4-connected components in scan order") {
  // Diagonal neighbours are separate components.
  Mask m(5, 5);
  m.set(0, 0, true);
  m.set(1, 1, true);
  m.set(3, 0, true);
  m.set(3, 1, true);
  m.set(4, 1, true);
  const auto comps = connected_components(m);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].box == BBox{0, 0, 1, 1});
  CHECK(comps[1].box == BBox{3, 0, 5, 2});
  CHECK(comps[1].pixels.size() == 3);
  CHECK(comps[2].box == BBox{1, 1, 2, 2});
}

TEST_CASE("rle round trip and layout") {
  Mask m(3, 2);
  m.set(1, 0, true);
  m.set(2, 0, true);
  m.set(0, 1, true);
  const auto rle = rle_encode(m);
  CHECK(rle.height == 2);
  CHECK(rle.width == 3);
  CHECK(rle.counts == std::vector<std::uint64_t>{1, 3, 2});
  CHECK(rle_decode(rle) == m);

  Mask full(2, 2, {1, 1, 1, 1});
  CHECK(rle_encode(full).counts == std::vector<std::uint64_t>{0, 4});
  CHECK(rle_encode(Mask(2, 2)).counts == std::vector<std::uint64_t>{4});

  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto r = zt::random_mask(rng, 1 + static_cast<int>(rng() % 40), 1 + static_cast<int>(rng() % 40));
    REQUIRE(rle_decode(rle_encode(r)) == r);
    const nlohmann::json j = rle_encode(r);
    REQUIRE(rle_decode(j.get<RleMask>()) == r);
  }

  CHECK_THROWS_AS(rle_decode(RleMask{2, 2, {1, 1}}), Error);
}

TEST_CASE("base64 round trip") {
  CHECK(base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o', 'b'}) == "Zm9vYg==");
  CHECK(base64_decode("Zm9vYmFy") == std::vector<std::uint8_t>{'f', 'o', 'o', 'b', 'a', 'r'});
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::uint8_t> bytes(rng() % 70);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    REQUIRE(base64_decode(base64_encode(bytes)) == bytes);
  }
  CHECK_THROWS_AS(base64_decode("Zm9v!"), Error);
  CHECK_THROWS_AS(base64_decode("Zm9"), Error);
}
