#include "zenesis/image_codec.hpp"

#include <tiffio.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "png_io.hpp"
#include "tiff_io.hpp"
#include "zenesis/error.hpp"

namespace zenesis {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::UnreadableFile, path.string() + ": cannot open");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> encode_png(const Image8& image) {
  detail::PngPixels px;
  px.width = static_cast<std::uint32_t>(image.width());
  px.height = static_cast<std::uint32_t>(image.height());
  px.channels = 3;
  px.bit_depth = 8;
  px.bytes = image.rgb();
  return detail::png_encode(px);
}

Image8 decode_png_rgb8(std::span<const std::uint8_t> bytes) {
  detail::PngPixels px;
  try {
    px = detail::png_decode(bytes);
  } catch (const Error& e) {
    throw Error(Errc::Protocol, e.what());
  }
  if (px.channels != 3 || px.bit_depth != 8) {
    throw Error(Errc::Protocol, "expected an 8-bit RGB PNG");
  }
  return Image8(static_cast<int>(px.width), static_cast<int>(px.height), std::move(px.bytes));
}

Volume decode_png_volume(std::span<const std::uint8_t> bytes, const std::string& source_path) {
  auto px = detail::png_decode(bytes);
  if (px.channels != 1 && px.channels != 3) {
    throw Error(Errc::UnsupportedLayout, source_path + ": PNG with alpha or unsupported channel count");
  }
  SampleBuffer buffer;
  if (px.bit_depth == 16) {
    std::vector<std::uint16_t> s(px.bytes.size() / 2);
    std::memcpy(s.data(), px.bytes.data(), px.bytes.size());
    buffer = std::move(s);
  } else {
    buffer = std::move(px.bytes);
  }
  return Volume(static_cast<int>(px.width), static_cast<int>(px.height), 1, px.channels, std::move(buffer),
                source_path);
}

std::vector<std::uint8_t> encode_png_volume(const Volume& volume) {
  if (volume.depth() != 1 || volume.sample_kind() == SampleKind::Float) {
    throw Error(Errc::UnsupportedLayout, "PNG holds one 8- or 16-bit slice");
  }
  detail::PngPixels px;
  px.width = static_cast<std::uint32_t>(volume.width());
  px.height = static_cast<std::uint32_t>(volume.height());
  px.channels = volume.channels();
  px.bit_depth = volume.bit_depth();
  std::visit(
      [&](const auto& v) {
        const auto* raw = reinterpret_cast<const std::uint8_t*>(v.data());
        px.bytes.assign(raw, raw + v.size() * sizeof(v[0]));
      },
      volume.pixels());
  return detail::png_encode(px);
}

void save_mask_stack(std::span<const Mask> masks, const std::filesystem::path& path) {
  if (masks.empty()) {
    throw Error(Errc::EmptyInput, "no masks to save");
  }
  std::vector<detail::TiffPage> pages(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Mask& m = masks[i];
    auto& page = pages[i];
    page.width = static_cast<std::uint32_t>(m.width());
    page.height = static_cast<std::uint32_t>(m.height());
    page.samples_per_pixel = 1;
    page.bits_per_sample = 1;
    page.sample_format = SAMPLEFORMAT_UINT;
    page.photometric = PHOTOMETRIC_MINISBLACK;
    const std::size_t row = page.row_bytes();
    page.bytes.assign(row * page.height, 0);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (m.at(x, y)) {
          page.bytes[y * row + x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
        }
      }
    }
  }
  detail::write_tiff_pages(path, pages, TiffCompression::Deflate);
}

namespace {

Mask mask_from_page(const detail::TiffPage& page, const std::string& where) {
  const int w = static_cast<int>(page.width);
  const int h = static_cast<int>(page.height);
  Mask mask(w, h);
  const std::size_t row = page.row_bytes();
  const int spp = page.samples_per_pixel;
  if (page.bits_per_sample == 1) {
    const bool inverted = page.photometric == PHOTOMETRIC_MINISWHITE;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t bit = static_cast<std::size_t>(x) * spp;
        bool on = (page.bytes[y * row + bit / 8] >> (7 - bit % 8)) & 1u;
        mask.set(x, y, on != inverted);
      }
    }
    return mask;
  }
  if (page.bits_per_sample % 8 != 0) {
    throw Error(Errc::UnsupportedLayout, where + ": unsupported mask bit depth");
  }
  const std::size_t pixel_bytes = static_cast<std::size_t>(spp) * page.bits_per_sample / 8;
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* p = page.bytes.data() + y * row;
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* px = p + x * pixel_bytes;
      mask.set(x, y, std::any_of(px, px + pixel_bytes, [](std::uint8_t b) { return b != 0; }));
    }
  }
  return mask;
}

bool is_mask_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".tif" || ext == ".tiff" || ext == ".png";
}

}  // namespace

std::vector<Mask> load_mask_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (detail::looks_like_png(bytes)) {
    const auto px = detail::png_decode(bytes);
    const int w = static_cast<int>(px.width);
    const int h = static_cast<int>(px.height);
    const std::size_t pixel_bytes = static_cast<std::size_t>(px.channels) * px.bit_depth / 8;
    Mask mask(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::uint8_t* p = px.bytes.data() + (static_cast<std::size_t>(y) * w + x) * pixel_bytes;
        mask.set(x, y, std::any_of(p, p + pixel_bytes, [](std::uint8_t b) { return b != 0; }));
      }
    }
    return {std::move(mask)};
  }
  if (!detail::looks_like_tiff(bytes)) {
    throw Error(Errc::UnreadableFile, path.string() + ": neither TIFF nor PNG");
  }
  std::vector<Mask> masks;
  for (const auto& page : detail::read_tiff_pages(path)) {
    masks.push_back(mask_from_page(page, path.string()));
  }
  return masks;
}

std::vector<Mask> load_mask_source(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw Error(Errc::NotFound, path.string() + ": no such file or directory");
  }
  if (!std::filesystem::is_directory(path, ec)) {
    return load_mask_file(path);
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && is_mask_extension(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Mask> masks;
  for (const auto& f : files) {
    auto part = load_mask_file(f);
    std::move(part.begin(), part.end(), std::back_inserter(masks));
  }
  return masks;
}

}  // namespace zenesis
