#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pansharp/tensor.hpp"

namespace pansharp {

/// Minimal 8-bit grayscale PNG writer (zlib-deflated, filter 0).
void write_png_gray8(const std::string& path, const std::vector<uint8_t>& pixels, int64_t width,
                     int64_t height);

/// Write one 8-bit PNG per band with per-band min-max scaling, plus a sidecar
/// `<stem>.scale.txt` recording the applied ranges. Diagnostic output only.
void write_band_previews(const std::string& stem, const Tensor& image);

}  // namespace pansharp
