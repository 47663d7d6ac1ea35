#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/metrics.hpp"

using namespace zenesis;

namespace {

Mask from_bits(int w, int h, std::vector<std::uint8_t> bits) { return Mask(w, h, std::move(bits)); }

SliceMetrics sm(int i, double v) { return SliceMetrics{i, v, v, v}; }

}  // namespace

TEST_CASE("confusion counts") {
  Mask a(4, 4);
  a.set(1, 1, true);
  a.set(2, 1, true);
  CHECK(confusion(a, a) == Confusion{2, 0, 0, 14});
  CHECK(confusion(Mask(4, 4), a) == Confusion{0, 0, 2, 14});
  CHECK_THROWS_AS(confusion(Mask(4, 4), Mask(4, 5)), Error);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto p = zt::random_mask(rng, 4, 4);
    const auto g = zt::random_mask(rng, 4, 4);
    const auto c = confusion(p, g);
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int k = 0; k < 16; ++k) {
      const bool pb = p.bits()[k], gb = g.bits()[k];
      tp += pb && gb;
      fp += pb && !gb;
      fn += !pb && gb;
      tn += !pb && !gb;
    }
    REQUIRE(c == Confusion{tp, fp, fn, tn});
  }
}

TEST_CASE("metric formulas") {
  const Confusion c{3, 1, 2, 10};
  CHECK(accuracy(c) == 0.8125);
  CHECK(iou(c) == 0.5);
  CHECK(dice(c) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

  // Same confusion built from pixels.
  const auto pred = from_bits(4, 4, {1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const auto gt = from_bits(4, 4, {1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(confusion(pred, gt) == c);

  const auto left = from_bits(2, 1, {1, 0});
  const auto right = from_bits(2, 1, {0, 1});
  const auto d = confusion(left, right);
  CHECK(accuracy(d) == 0.0);
  CHECK(iou(d) == 0.0);
  CHECK(dice(d) == 0.0);

  const Confusion empty{0, 0, 0, 9};
  CHECK(iou(empty) == 1.0);
  CHECK(dice(empty) == 1.0);
  MetricOptions zero;
  zero.empty_as_one = false;
  CHECK(iou(empty, zero) == 0.0);
  CHECK(dice(empty, zero) == 0.0);
}

TEST_CASE("complement invariance holds for accuracy only") {
  const auto p = from_bits(4, 1, {1, 1, 0, 0});
  const auto g = from_bits(4, 1, {1, 0, 0, 0});
  const auto pc = from_bits(4, 1, {0, 0, 1, 1});
  const auto gc = from_bits(4, 1, {0, 1, 1, 1});
  CHECK(accuracy(confusion(p, g)) == accuracy(confusion(pc, gc)));
  CHECK(iou(confusion(p, g)) != iou(confusion(pc, gc)));
}

TEST_CASE("aggregation") {
  const std::vector<SliceMetrics> one = {sm(0, 0.7)};
  CHECK(aggregate(one).iou.std == 0.0);
  CHECK(aggregate(one).sample_count == 1);

  const std::vector<SliceMetrics> two = {sm(0, 0.8), sm(1, 1.0)};
  const auto r = aggregate(two);
  CHECK(r.iou.mean == Catch::Approx(0.9).epsilon(1e-15));
  CHECK(r.iou.std == Catch::Approx(std::sqrt(0.02)).epsilon(1e-12));

  std::vector<SliceMetrics> many;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 37; ++i) many.push_back(sm(i, std::uniform_real_distribution<double>(0, 1)(rng)));
  const auto base = aggregate(many);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(many.begin(), many.end(), rng);
    const auto shuffled = aggregate(many);
    REQUIRE(shuffled.iou == base.iou);
    REQUIRE(shuffled.dice == base.dice);
    REQUIRE(shuffled.accuracy == base.accuracy);
  }
  CHECK_THROWS_AS(aggregate(std::vector<SliceMetrics>{}), Error);
}

TEST_CASE("evaluate pair sets from disk") {
  zt::TempDir dir;
  std::mt19937_64 rng(12);
  std::vector<Mask> pred, gt;
  for (int i = 0; i < 10; ++i) {
    pred.push_back(zt::random_mask(rng, 9, 7));
    gt.push_back(zt::random_mask(rng, 9, 7));
  }
  save_mask_stack(pred, dir / "pred.tif");
  save_mask_stack(gt, dir / "gt.tif");
  const auto r = evaluate_pair_set(dir / "pred.tif", dir / "gt.tif");
  REQUIRE(r.per_slice.size() == 10);
  for (int i = 0; i < 10; ++i) {
    const auto o = zt::metrics_oracle(pred[i], gt[i]);
    CHECK(r.per_slice[i].slice_index == i);
    CHECK(r.per_slice[i].accuracy == Catch::Approx(o.accuracy).margin(1e-12));
    CHECK(r.per_slice[i].iou == Catch::Approx(o.iou).margin(1e-12));
    CHECK(r.per_slice[i].dice == Catch::Approx(o.dice).margin(1e-12));
  }

  const auto self = evaluate_pair_set(dir / "gt.tif", dir / "gt.tif");
  CHECK(self.iou.mean == 1.0);
  CHECK(self.dice.mean == 1.0);
  CHECK(self.accuracy.mean == 1.0);

  std::vector<Mask> short_set(gt.begin(), gt.begin() + 3);
  save_mask_stack(short_set, dir / "short.tif");
  try {
    evaluate_pair_set(dir / "short.tif", dir / "gt.tif");
    FAIL("expected CountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CountMismatch);
  }

  std::vector<Mask> wide = gt;
  wide[4] = Mask(10, 7);
  save_mask_stack(wide, dir / "wide.tif");
  try {
    evaluate_pair_set(dir / "wide.tif", dir / "gt.tif");
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
    CHECK(std::string(e.what()).find("slice 4") != std::string::npos);
  }
}

TEST_CASE("report serialisation") {
  const std::vector<SliceMetrics> s = {{0, 1.0, 0.5, 2.0 / 3.0}, {1, 0.5, 0.25, 0.4}};
  const auto r = aggregate(s);
  const nlohmann::json j = r;
  CHECK(j["per_slice"].size() == 2);
  CHECK(j["aggregate"]["iou"]["mean"] == r.iou.mean);
  CHECK(j.get<MetricsReport>() == r);
  const auto csv = to_csv(r);
  CHECK(csv.rfind("slice,accuracy,iou,dice\n0,1.000000,0.500000,0.666667\n", 0) == 0);
  CHECK(csv.find("\nmean,0.750000,0.375000,") != std::string::npos);
  CHECK(csv.find("\nstd,0.353553,") != std::string::npos);
}
