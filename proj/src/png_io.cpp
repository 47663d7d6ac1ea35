#include "png_io.hpp"

#include <png.h>

#include <bit>
#include <cstring>

#include "zenesis/error.hpp"

namespace zenesis::detail {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_from_cursor(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_to_vector(png_structp png, png_bytep in, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + length);
}

void flush_noop(png_structp) {}

void warn_noop(png_structp, png_const_charp) {}

// libpng reports errors through longjmp; nothing with a destructor may live in
// these frames after setjmp.
bool decode_into(png_structp png, png_infop info, ReadCursor* cursor, PngPixels* out,
                 std::vector<png_bytep>* rows) {
  if (setjmp(png_jmpbuf(png))) {
    return false;
  }
  png_set_read_fn(png, cursor, read_from_cursor);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->channels = png_get_channels(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out->bytes.resize(row_bytes * out->height);
  rows->resize(out->height);
  for (std::uint32_t y = 0; y < out->height; ++y) {
    (*rows)[y] = out->bytes.data() + y * row_bytes;
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  return true;
}

bool encode_into(png_structp png, png_infop info, const PngPixels* in, std::vector<std::uint8_t>* out,
                 std::vector<png_bytep>* rows) {
  if (setjmp(png_jmpbuf(png))) {
    return false;
  }
  png_set_write_fn(png, out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, in->width, in->height, in->bit_depth,
               in->channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (in->bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

bool looks_like_png(std::span<const std::uint8_t> head) {
  return head.size() >= 8 && png_sig_cmp(head.data(), 0, 8) == 0;
}

PngPixels png_decode(std::span<const std::uint8_t> bytes) {
  if (!looks_like_png(bytes)) {
    throw Error(Errc::UnreadableFile, "not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warn_noop);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::UnreadableFile, "libpng initialisation failed");
  }
  ReadCursor cursor{bytes, 0};
  PngPixels out;
  std::vector<png_bytep> rows;
  const bool ok = decode_into(png, info, &cursor, &out, &rows);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) {
    throw Error(Errc::UnreadableFile, "corrupt PNG stream");
  }
  return out;
}

std::vector<std::uint8_t> png_encode(const PngPixels& pixels) {
  if ((pixels.channels != 1 && pixels.channels != 3) || (pixels.bit_depth != 8 && pixels.bit_depth != 16)) {
    throw Error(Errc::UnsupportedLayout, "PNG encoding supports 8/16-bit gray or RGB only");
  }
  const std::size_t row_bytes = std::size_t{pixels.width} * pixels.channels * (pixels.bit_depth / 8);
  if (pixels.bytes.size() != row_bytes * pixels.height) {
    throw Error(Errc::InvalidArgument, "PNG pixel buffer size mismatch");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warn_noop);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::UnreadableFile, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(pixels.height);
  for (std::uint32_t y = 0; y < pixels.height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels.bytes.data() + y * row_bytes);
  }
  std::vector<std::uint8_t> out;
  const bool ok = encode_into(png, info, &pixels, &out, &rows);
  png_destroy_write_struct(&png, &info);
  if (!ok) {
    throw Error(Errc::UnreadableFile, "PNG encoding failed");
  }
  return out;
}

}  // namespace zenesis::detail
