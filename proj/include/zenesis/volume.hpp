#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace zenesis {

enum class SampleKind { UnsignedInt, Float };

/// Owning sample storage. The alternative held fixes bit depth and sample kind.
using SampleBuffer = std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>, std::vector<float>>;
using SampleSpan = std::variant<std::span<const std::uint8_t>, std::span<const std::uint16_t>, std::span<const float>>;

int bit_depth_of(const SampleBuffer& buffer);
SampleKind sample_kind_of(const SampleBuffer& buffer);
std::size_t size_of(const SampleSpan& samples);

/// A raw scientific image or stack, exactly as stored on disk.
///
/// Samples are slice-major, row-major and channel-interleaved. A 2D image is a
/// volume with depth 1. Instances are immutable after construction and can be
/// shared between threads.
class Volume {
 public:
  Volume(int width, int height, int depth, int channels, SampleBuffer pixels, std::string source_path = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int depth() const noexcept { return depth_; }
  int channels() const noexcept { return channels_; }
  int bit_depth() const noexcept { return bit_depth_of(pixels_); }
  SampleKind sample_kind() const noexcept { return sample_kind_of(pixels_); }
  const std::string& source_path() const noexcept { return source_path_; }

  const SampleBuffer& pixels() const noexcept { return pixels_; }
  SampleSpan samples() const;

  std::size_t slice_samples() const noexcept {
    return static_cast<std::size_t>(width_) * height_ * channels_;
  }
  std::size_t sample_count() const noexcept { return slice_samples() * depth_; }

 private:
  int width_;
  int height_;
  int depth_;
  int channels_;
  SampleBuffer pixels_;
  std::string source_path_;
};

/// Non-owning view of one slice. Valid while the parent Volume lives.
struct RawSlice {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  SampleKind sample_kind = SampleKind::UnsignedInt;
  int index = 0;
  SampleSpan pixels;
};

struct VolumeMeta {
  int width = 0;
  int height = 0;
  int depth = 0;
  int channels = 0;
  int bit_depth = 0;
  SampleKind sample_kind = SampleKind::UnsignedInt;
  double min_value = 0.0;
  double max_value = 0.0;
};

enum class TiffCompression { None, Deflate };

/// Reads a single/multi-page TIFF or a PNG. Pixel values are preserved bit-exact.
Volume load_volume(const std::filesystem::path& path);

RawSlice slice_at(const Volume& volume, int index);

VolumeMeta volume_info(const Volume& volume);

/// Writes every slice as one TIFF page.
void save_tiff(const Volume& volume, const std::filesystem::path& path,
               TiffCompression compression = TiffCompression::None);

/// Writes a depth-1, 8- or 16-bit volume as PNG.
void save_png(const Volume& volume, const std::filesystem::path& path);

}  // namespace zenesis
