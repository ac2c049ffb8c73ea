#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fisheye {

/// 8-bit raster, 1 channel (gray) or 3 channels (RGB), row-major interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int width_in, int height_in, int channels_in,
        std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Image&) const = default;
};

/// Reads a binary PGM (P5) or PPM (P6) image with maxval 255.
Image read_pnm(std::istream& in);
Image read_pnm(const std::string& path);

/// Writes P5 for 1-channel images, P6 for 3-channel images.
void write_pnm(const Image& image, std::ostream& out);
void write_pnm(const Image& image, const std::string& path);

}  // namespace fisheye
