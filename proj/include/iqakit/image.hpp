#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace iqakit {

/// Interleaved 8-bit pixel buffer, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c);

  std::size_t row_bytes() const { return static_cast<std::size_t>(width) * channels; }
  bool operator==(const Image&) const = default;
};

/// Decodes any raster format OpenCV understands into a 3-channel image.
/// Throws ImageDecodeError.
Image load_image(const std::filesystem::path& path);

/// Encodes by file extension. Throws IoError.
void save_image(const std::filesystem::path& path, const Image& img);

/// Area-averaged resize to exactly (width, height).
Image resize_image(const Image& img, int width, int height);

}  // namespace iqakit
