#include "tiff_io.hpp"

#include <tiffio.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>

#include "zenesis/error.hpp"

namespace zenesis::detail {
namespace {

struct TiffCloser {
  void operator()(TIFF* tif) const { TIFFClose(tif); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

void silence_libtiff() {
  static const bool once = [] {
    TIFFSetWarningHandler(nullptr);
    TIFFSetErrorHandler(nullptr);
    return true;
  }();
  (void)once;
}

TiffPage read_directory(TIFF* tif, const std::string& where) {
  TiffPage page;
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  if (!TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w) || !TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h) || w == 0 ||
      h == 0) {
    throw Error(Errc::UnreadableFile, where + ": missing image dimensions");
  }
  std::uint16_t planar = PLANARCONFIG_CONTIG;
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &page.samples_per_pixel);
  TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &page.bits_per_sample);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &page.sample_format);
  TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
  if (!TIFFGetField(tif, TIFFTAG_PHOTOMETRIC, &page.photometric)) {
    page.photometric = page.samples_per_pixel == 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK;
  }
  page.width = w;
  page.height = h;
  if (page.samples_per_pixel > 1 && planar != PLANARCONFIG_CONTIG) {
    throw Error(Errc::UnsupportedLayout, where + ": separate planar configuration");
  }
  if (page.photometric == PHOTOMETRIC_PALETTE || page.photometric == PHOTOMETRIC_YCBCR) {
    throw Error(Errc::UnsupportedLayout, where + ": unsupported photometric interpretation");
  }

  const std::size_t row = page.row_bytes();
  page.bytes.assign(row * h, 0);

  if (TIFFIsTiled(tif)) {
    std::uint32_t tw = 0;
    std::uint32_t th = 0;
    TIFFGetField(tif, TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(tif, TIFFTAG_TILELENGTH, &th);
    if (page.bits_per_sample % 8 != 0) {
      throw Error(Errc::UnsupportedLayout, where + ": tiled sub-byte samples");
    }
    const std::size_t pixel_bytes = std::size_t{page.samples_per_pixel} * page.bits_per_sample / 8;
    std::vector<std::uint8_t> tile(static_cast<std::size_t>(TIFFTileSize(tif)));
    for (std::uint32_t ty = 0; ty < h; ty += th) {
      for (std::uint32_t tx = 0; tx < w; tx += tw) {
        if (TIFFReadTile(tif, tile.data(), tx, ty, 0, 0) < 0) {
          throw Error(Errc::UnreadableFile, where + ": corrupt tile");
        }
        const std::uint32_t rows = std::min(th, h - ty);
        const std::uint32_t cols = std::min(tw, w - tx);
        for (std::uint32_t r = 0; r < rows; ++r) {
          std::memcpy(page.bytes.data() + (ty + r) * row + tx * pixel_bytes, tile.data() + r * tw * pixel_bytes,
                      cols * pixel_bytes);
        }
      }
    }
  } else {
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(TIFFScanlineSize(tif)));
    if (scan.size() < row) {
      throw Error(Errc::UnreadableFile, where + ": inconsistent scanline size");
    }
    for (std::uint32_t y = 0; y < h; ++y) {
      if (TIFFReadScanline(tif, scan.data(), y, 0) < 0) {
        throw Error(Errc::UnreadableFile, where + ": corrupt strip data");
      }
      std::memcpy(page.bytes.data() + y * row, scan.data(), row);
    }
  }
  return page;
}

}  // namespace

bool looks_like_tiff(std::span<const std::uint8_t> head) {
  if (head.size() < 4) return false;
  const bool le = head[0] == 'I' && head[1] == 'I' && (head[2] == 42 || head[2] == 43) && head[3] == 0;
  const bool be = head[0] == 'M' && head[1] == 'M' && head[2] == 0 && (head[3] == 42 || head[3] == 43);
  return le || be;
}

std::vector<TiffPage> read_tiff_pages(const std::filesystem::path& path) {
  silence_libtiff();
  const std::string where = path.string();
  TiffHandle tif(TIFFOpen(where.c_str(), "r"));
  if (!tif) {
    throw Error(Errc::UnreadableFile, where + ": cannot open as TIFF");
  }
  std::vector<TiffPage> pages;
  do {
    pages.push_back(read_directory(tif.get(), where));
  } while (TIFFReadDirectory(tif.get()));
  return pages;
}

void write_tiff_pages(const std::filesystem::path& path, std::span<const TiffPage> pages,
                      TiffCompression compression) {
  silence_libtiff();
  std::size_t total = 0;
  for (const auto& page : pages) total += page.bytes.size();
  const std::string where = path.string();
  // Classic TIFF offsets are 32-bit.
  const char* mode = total > (std::size_t{3} << 30) ? "w8" : "w";
  TiffHandle tif(TIFFOpen(where.c_str(), mode));
  if (!tif) {
    throw Error(Errc::UnreadableFile, where + ": cannot create TIFF");
  }
  const auto page_count = static_cast<std::uint16_t>(std::min<std::size_t>(pages.size(), 0xFFFF));
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const TiffPage& page = pages[i];
    TIFF* t = tif.get();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, page.width);
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, page.height);
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, page.samples_per_pixel);
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, page.bits_per_sample);
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, page.sample_format);
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, page.photometric);
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(t, TIFFTAG_COMPRESSION,
                 compression == TiffCompression::Deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE);
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(t, 0));
    if (pages.size() > 1) {
      TIFFSetField(t, TIFFTAG_SUBFILETYPE, FILETYPE_PAGE);
      TIFFSetField(t, TIFFTAG_PAGENUMBER, static_cast<std::uint16_t>(i), page_count);
    }
    const std::size_t row = page.row_bytes();
    std::vector<std::uint8_t> scan(row);
    for (std::uint32_t y = 0; y < page.height; ++y) {
      std::memcpy(scan.data(), page.bytes.data() + y * row, row);
      if (TIFFWriteScanline(t, scan.data(), y, 0) < 0) {
        throw Error(Errc::UnreadableFile, where + ": write failed");
      }
    }
    if (!TIFFWriteDirectory(t)) {
      throw Error(Errc::UnreadableFile, where + ": write failed");
    }
  }
}

}  // namespace zenesis::detail
