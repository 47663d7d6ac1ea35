#include <catch_amalgamated.hpp>

#include <fstream>
#include <numeric>

#include "support.hpp"
#include "tiff_io.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"
#include "zenesis/volume.hpp"

using namespace zenesis;

namespace {

template <typename T>
Volume ramp_volume(int w, int h, int d, int c = 1) {
  std::vector<T> px(static_cast<std::size_t>(w) * h * d * c);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<T>(i * 37 % 251);
  return Volume(w, h, d, c, std::move(px));
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected zenesis::Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("tiff round trip preserves samples at every supported depth") {
  zt::TempDir dir;
  for (const auto compression : {TiffCompression::None, TiffCompression::Deflate}) {
    const auto v8 = ramp_volume<std::uint8_t>(17, 9, 3, 3);
    save_tiff(v8, dir / "v8.tif", compression);
    const auto r8 = load_volume(dir / "v8.tif");
    CHECK(r8.pixels() == v8.pixels());
    CHECK(r8.channels() == 3);
    CHECK(r8.depth() == 3);

    std::vector<std::uint16_t> p16(31 * 5 * 4);
    std::iota(p16.begin(), p16.end(), std::uint16_t{65000});
    const Volume v16(31, 5, 4, 1, p16);
    save_tiff(v16, dir / "v16.tif", compression);
    const auto r16 = load_volume(dir / "v16.tif");
    CHECK(r16.bit_depth() == 16);
    CHECK(r16.pixels() == v16.pixels());

    std::vector<float> pf = {-1.5f, 0.0f, 3.25f, 1e30f, -0.0f, 7.0f};
    const Volume vf(3, 1, 2, 1, pf);
    save_tiff(vf, dir / "vf.tif", compression);
    const auto rf = load_volume(dir / "vf.tif");
    CHECK(rf.sample_kind() == SampleKind::Float);
    CHECK(rf.pixels() == vf.pixels());
  }
}

TEST_CASE("png round trip for gray and rgb") {
  zt::TempDir dir;
  const auto rgb = ramp_volume<std::uint8_t>(6, 4, 1, 3);
  save_png(rgb, dir / "rgb.png");
  CHECK(load_volume(dir / "rgb.png").pixels() == rgb.pixels());

  std::vector<std::uint16_t> p16 = {0, 1, 256, 65535, 4097, 12};
  const Volume g16(3, 2, 1, 1, p16);
  save_png(g16, dir / "g16.png");
  const auto r16 = load_volume(dir / "g16.png");
  CHECK(r16.bit_depth() == 16);
  CHECK(r16.pixels() == g16.pixels());
}

TEST_CASE("mixed page sizes are rejected") {
  zt::TempDir dir;
  detail::TiffPage a;
  a.width = 4;
  a.height = 4;
  a.bits_per_sample = 8;
  a.bytes.assign(16, 1);
  detail::TiffPage b = a;
  b.width = 5;
  b.bytes.assign(20, 2);
  const std::vector<detail::TiffPage> pages = {a, b};
  detail::write_tiff_pages(dir / "mixed.tif", pages, TiffCompression::None);
  CHECK(code_of([&] { load_volume(dir / "mixed.tif"); }) == Errc::UnsupportedLayout);
}

TEST_CASE("unreadable and unsupported inputs") {
  zt::TempDir dir;
  CHECK(code_of([&] { load_volume(dir / "missing.tif"); }) == Errc::UnreadableFile);
  {
    std::ofstream(dir / "junk.tif") << "definitely not an image";
  }
  CHECK(code_of([&] { load_volume(dir / "junk.tif"); }) == Errc::UnreadableFile);
  CHECK(code_of([] { Volume(2, 2, 1, 2, std::vector<std::uint8_t>(8)); }) == Errc::UnsupportedLayout);
  CHECK(code_of([] { Volume(1, 1, 1, 1, std::vector<float>{std::nanf("")}); }) == Errc::UnsupportedLayout);
}

TEST_CASE("slice_at indexes slices and concatenates back") {
  const auto v = ramp_volume<std::uint16_t>(5, 3, 4);
  std::vector<std::uint16_t> joined;
  for (int z = 0; z < v.depth(); ++z) {
    const auto s = slice_at(v, z);
    CHECK(s.index == z);
    const auto span = std::get<std::span<const std::uint16_t>>(s.pixels);
    joined.insert(joined.end(), span.begin(), span.end());
  }
  CHECK(SampleBuffer(joined) == v.pixels());
  CHECK(code_of([&] { slice_at(v, 4); }) == Errc::IndexOutOfRange);
  CHECK(code_of([&] { slice_at(v, -1); }) == Errc::IndexOutOfRange);
}

TEST_CASE("volume_info scans every sample") {
  const Volume constant(3, 3, 2, 1, std::vector<std::uint8_t>(18, 7));
  CHECK(volume_info(constant).min_value == 7);
  CHECK(volume_info(constant).max_value == 7);

  std::vector<std::uint8_t> two(8, 3);
  std::fill(two.begin() + 4, two.end(), 9);
  const auto meta = volume_info(Volume(2, 2, 2, 1, two));
  CHECK(meta.min_value == 3);
  CHECK(meta.max_value == 9);
  CHECK(meta.depth == 2);

  std::vector<std::uint16_t> ramp(65536);
  std::iota(ramp.begin(), ramp.end(), 0);
  const auto rm = volume_info(Volume(256, 256, 1, 1, ramp));
  CHECK(rm.bit_depth == 16);
  CHECK(rm.min_value == 0);
  CHECK(rm.max_value == 65535);
}

TEST_CASE("mask stacks reload bit exact") {
  zt::TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<Mask> masks;
  for (int i = 0; i < 4; ++i) masks.push_back(zt::random_mask(rng, 13, 7));
  save_mask_stack(masks, dir / "m.tif");
  CHECK(load_mask_source(dir / "m.tif") == masks);

  std::filesystem::create_directories(dir / "seq");
  for (int i = 0; i < 4; ++i) {
    const std::vector<Mask> one = {masks[i]};
    save_mask_stack(one, dir / "seq" / ("s" + std::to_string(i) + ".tif"));
  }
  CHECK(load_mask_source(dir / "seq") == masks);
  CHECK(code_of([&] { load_mask_source(dir / "nope"); }) == Errc::NotFound);
}

TEST_CASE("reads files produced by other writers") {
  const std::filesystem::path fixtures = ZENESIS_FIXTURE_DIR;
  const auto v = load_volume(fixtures / "ramp16_512x512x10.tif");
  REQUIRE(v.width() == 512);
  REQUIRE(v.height() == 512);
  REQUIRE(v.depth() == 10);
  CHECK(v.channels() == 1);
  CHECK(v.bit_depth() == 16);
  const auto& px = std::get<std::vector<std::uint16_t>>(v.pixels());
  std::size_t mismatches = 0;
  std::size_t i = 0;
  for (int z = 0; z < 10; ++z) {
    for (int y = 0; y < 512; ++y) {
      for (int x = 0; x < 512; ++x) {
        mismatches += px[i++] != static_cast<std::uint16_t>((x * 7 + y * 13 + z * 1000) % 65536);
      }
    }
  }
  CHECK(mismatches == 0);
  const auto last = std::get<std::span<const std::uint16_t>>(slice_at(v, 9).pixels);
  CHECK(last[0] == 9000);

  const auto rgb = load_volume(fixtures / "rgb8_64x64.png");
  REQUIRE(rgb.width() == 64);
  CHECK(rgb.depth() == 1);
  CHECK(rgb.channels() == 3);
  CHECK(rgb.bit_depth() == 8);
  const auto& b = std::get<std::vector<std::uint8_t>>(rgb.pixels());
  const std::size_t at = (10 * 64 + 20) * 3;
  CHECK(b[at] == 80);
  CHECK(b[at + 1] == 40);
  CHECK(b[at + 2] == 30);
}
