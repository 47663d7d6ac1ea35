#include "zenesis/volume.hpp"

#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "png_io.hpp"
#include "tiff_io.hpp"
#include "zenesis/error.hpp"
#include "zenesis/image_codec.hpp"

namespace zenesis {

int bit_depth_of(const SampleBuffer& buffer) {
  return std::visit([](const auto& v) { return static_cast<int>(sizeof(typename std::decay_t<decltype(v)>::value_type) * 8); },
                    buffer);
}

SampleKind sample_kind_of(const SampleBuffer& buffer) {
  return std::holds_alternative<std::vector<float>>(buffer) ? SampleKind::Float : SampleKind::UnsignedInt;
}

std::size_t size_of(const SampleSpan& samples) {
  return std::visit([](const auto& s) { return s.size(); }, samples);
}

Volume::Volume(int width, int height, int depth, int channels, SampleBuffer pixels, std::string source_path)
    : width_(width),
      height_(height),
      depth_(depth),
      channels_(channels),
      pixels_(std::move(pixels)),
      source_path_(std::move(source_path)) {
  if (width <= 0 || height <= 0 || depth <= 0) {
    throw Error(Errc::UnsupportedLayout, "volume dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(Errc::UnsupportedLayout, "channel count must be 1 or 3, got " + std::to_string(channels));
  }
  const std::size_t n = std::visit([](const auto& v) { return v.size(); }, pixels_);
  if (n != sample_count()) {
    throw Error(Errc::UnsupportedLayout, "sample buffer length does not match dimensions");
  }
  if (const auto* f = std::get_if<std::vector<float>>(&pixels_)) {
    if (std::any_of(f->begin(), f->end(), [](float v) { return std::isnan(v); })) {
      throw Error(Errc::UnsupportedLayout, "NaN samples are not accepted");
    }
  }
}

SampleSpan Volume::samples() const {
  return std::visit([](const auto& v) -> SampleSpan { return std::span(v.data(), v.size()); }, pixels_);
}

namespace {

template <typename T>
std::vector<T> gather_samples(const std::vector<detail::TiffPage>& pages) {
  const std::size_t per_page = pages.front().bytes.size() / sizeof(T);
  std::vector<T> out(per_page * pages.size());
  for (std::size_t i = 0; i < pages.size(); ++i) {
    std::memcpy(out.data() + i * per_page, pages[i].bytes.data(), pages[i].bytes.size());
  }
  return out;
}

Volume volume_from_tiff(const std::filesystem::path& path) {
  const auto pages = detail::read_tiff_pages(path);
  const auto& first = pages.front();
  for (const auto& page : pages) {
    if (page.width != first.width || page.height != first.height ||
        page.samples_per_pixel != first.samples_per_pixel || page.bits_per_sample != first.bits_per_sample ||
        page.sample_format != first.sample_format) {
      throw Error(Errc::UnsupportedLayout, path.string() + ": pages differ in size or sample layout");
    }
  }
  const int channels = first.samples_per_pixel;
  if (channels != 1 && channels != 3) {
    throw Error(Errc::UnsupportedLayout, path.string() + ": channels must be 1 or 3");
  }
  SampleBuffer buffer;
  const auto fmt = first.sample_format;
  if (first.bits_per_sample == 8 && fmt == SAMPLEFORMAT_UINT) {
    buffer = gather_samples<std::uint8_t>(pages);
  } else if (first.bits_per_sample == 16 && fmt == SAMPLEFORMAT_UINT) {
    buffer = gather_samples<std::uint16_t>(pages);
  } else if (first.bits_per_sample == 32 && fmt == SAMPLEFORMAT_IEEEFP) {
    buffer = gather_samples<float>(pages);
  } else {
    throw Error(Errc::UnsupportedLayout, path.string() + ": unsupported sample format (" +
                                             std::to_string(first.bits_per_sample) + "-bit, format " +
                                             std::to_string(fmt) + ")");
  }
  return Volume(static_cast<int>(first.width), static_cast<int>(first.height), static_cast<int>(pages.size()),
                channels, std::move(buffer), path.string());
}

template <typename T>
void fill_extrema(std::span<const T> s, double& lo, double& hi) {
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  lo = static_cast<double>(*mn);
  hi = static_cast<double>(*mx);
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::UnreadableFile, path.string() + ": cannot open");
  }
  std::uint8_t head[8] = {};
  in.read(reinterpret_cast<char*>(head), sizeof head);
  const auto got = static_cast<std::size_t>(in.gcount());
  in.close();
  const std::span<const std::uint8_t> sig(head, got);
  if (detail::looks_like_tiff(sig)) {
    return volume_from_tiff(path);
  }
  if (detail::looks_like_png(sig)) {
    return decode_png_volume(read_file_bytes(path), path.string());
  }
  throw Error(Errc::UnreadableFile, path.string() + ": neither TIFF nor PNG");
}

RawSlice slice_at(const Volume& volume, int index) {
  if (index < 0 || index >= volume.depth()) {
    throw Error(Errc::IndexOutOfRange,
                "slice " + std::to_string(index) + " outside [0, " + std::to_string(volume.depth()) + ")");
  }
  const std::size_t n = volume.slice_samples();
  const std::size_t offset = n * static_cast<std::size_t>(index);
  RawSlice slice;
  slice.width = volume.width();
  slice.height = volume.height();
  slice.channels = volume.channels();
  slice.bit_depth = volume.bit_depth();
  slice.sample_kind = volume.sample_kind();
  slice.index = index;
  slice.pixels = std::visit([&](const auto& s) -> SampleSpan { return s.subspan(offset, n); }, volume.samples());
  return slice;
}

VolumeMeta volume_info(const Volume& volume) {
  VolumeMeta meta;
  meta.width = volume.width();
  meta.height = volume.height();
  meta.depth = volume.depth();
  meta.channels = volume.channels();
  meta.bit_depth = volume.bit_depth();
  meta.sample_kind = volume.sample_kind();
  std::visit([&](const auto& s) { fill_extrema(s, meta.min_value, meta.max_value); }, volume.samples());
  return meta;
}

void save_tiff(const Volume& volume, const std::filesystem::path& path, TiffCompression compression) {
  std::vector<detail::TiffPage> pages(volume.depth());
  const std::size_t bytes_per_slice = volume.slice_samples() * (volume.bit_depth() / 8);
  const auto* raw = std::visit([](const auto& v) { return reinterpret_cast<const std::uint8_t*>(v.data()); },
                               volume.pixels());
  for (int z = 0; z < volume.depth(); ++z) {
    auto& page = pages[z];
    page.width = volume.width();
    page.height = volume.height();
    page.samples_per_pixel = static_cast<std::uint16_t>(volume.channels());
    page.bits_per_sample = static_cast<std::uint16_t>(volume.bit_depth());
    page.sample_format = volume.sample_kind() == SampleKind::Float ? SAMPLEFORMAT_IEEEFP : SAMPLEFORMAT_UINT;
    page.photometric = volume.channels() == 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK;
    page.bytes.assign(raw + z * bytes_per_slice, raw + (z + 1) * bytes_per_slice);
  }
  detail::write_tiff_pages(path, pages, compression);
}

void save_png(const Volume& volume, const std::filesystem::path& path) {
  const auto bytes = encode_png_volume(volume);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(Errc::UnreadableFile, path.string() + ": write failed");
  }
}

}  // namespace zenesis
