#include "pansharp/png_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pansharp {

namespace {

void put_u32be(std::ofstream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_chunk(std::ofstream& os, const char type[4], const std::vector<unsigned char>& data) {
  put_u32be(os, static_cast<uint32_t>(data.size()));
  os.write(type, 4);
  if (!data.empty()) os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  put_u32be(os, static_cast<uint32_t>(crc));
}

}  // namespace

void write_png_gray8(const std::string& path, const std::vector<uint8_t>& pixels, int64_t width,
                     int64_t height) {
  if (static_cast<int64_t>(pixels.size()) != width * height)
    throw ContractError("write_png_gray8: pixel count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  os.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<unsigned char> ihdr(13);
  const uint32_t w32 = static_cast<uint32_t>(width), h32 = static_cast<uint32_t>(height);
  ihdr[0] = w32 >> 24; ihdr[1] = w32 >> 16; ihdr[2] = w32 >> 8; ihdr[3] = w32;
  ihdr[4] = h32 >> 24; ihdr[5] = h32 >> 16; ihdr[6] = h32 >> 8; ihdr[7] = h32;
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = ihdr[11] = ihdr[12] = 0;
  put_chunk(os, "IHDR", ihdr);
  // Raw scanlines with filter byte 0.
  std::vector<unsigned char> raw(static_cast<size_t>(height * (width + 1)));
  for (int64_t y = 0; y < height; ++y) {
    raw[static_cast<size_t>(y * (width + 1))] = 0;
    std::memcpy(&raw[static_cast<size_t>(y * (width + 1) + 1)], &pixels[static_cast<size_t>(y * width)],
                static_cast<size_t>(width));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw FormatError(path + ": deflate failed");
  idat.resize(bound);
  put_chunk(os, "IDAT", idat);
  put_chunk(os, "IEND", {});
  if (!os) throw FormatError(path + ": write failed");
}

void write_band_previews(const std::string& stem, const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("write_band_previews: expected H x W x C");
  const int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  std::ofstream sidecar(stem + ".scale.txt");
  if (!sidecar) throw FormatError(stem + ".scale.txt: cannot open for writing");
  for (int64_t band = 0; band < c; ++band) {
    double lo = image.at(band), hi = image.at(band);
    for (int64_t p = 0; p < h * w; ++p) {
      const double v = image.at(p * c + band);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<uint8_t> pix(static_cast<size_t>(h * w));
    for (int64_t p = 0; p < h * w; ++p) {
      const double v = (image.at(p * c + band) - lo) / span;
      pix[static_cast<size_t>(p)] = static_cast<uint8_t>(std::lround(255.0 * std::min(1.0, std::max(0.0, v))));
    }
    char name[32];
    std::snprintf(name, sizeof(name), ".band%lld.png", static_cast<long long>(band));
    write_png_gray8(stem + name, pix, w, h);
    char line[128];
    std::snprintf(line, sizeof(line), "band%lld min %.17g max %.17g\n",
                  static_cast<long long>(band), lo, hi);
    sidecar << line;
  }
}

}  // namespace pansharp
