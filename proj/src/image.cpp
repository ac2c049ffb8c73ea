#include "fisheye/image.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "fisheye/types.hpp"

namespace fisheye {

Image::Image(int width_in, int height_in, int channels_in, std::uint8_t fill)
    : width(width_in), height(height_in), channels(channels_in) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
    throw ShapeError("image: bad dimensions or channel count");
  data.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

namespace {

// Reads the next whitespace-separated token, skipping '#' comment lines.
int read_header_int(std::istream& in, const char* what) {
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw std::runtime_error(std::string("pnm: truncated header reading ") + what);
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value))
    throw std::runtime_error(std::string("pnm: malformed header field ") + what);
  return value;
}

}  // namespace

Image read_pnm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw std::runtime_error("pnm: expected binary P5 or P6 magic");
  const int channels = magic[1] == '5' ? 1 : 3;
  const int width = read_header_int(in, "width");
  const int height = read_header_int(in, "height");
  const int maxval = read_header_int(in, "maxval");
  if (width <= 0 || height <= 0)
    throw std::runtime_error("pnm: non-positive dimensions");
  if (maxval != 255) throw std::runtime_error("pnm: only maxval 255 supported");
  in.get();  // single whitespace byte after the header
  Image image(width, height, channels);
  in.read(reinterpret_cast<char*>(image.data.data()),
          static_cast<std::streamsize>(image.data.size()));
  if (static_cast<std::size_t>(in.gcount()) != image.data.size())
    throw std::runtime_error("pnm: truncated pixel data");
  return image;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pnm: cannot open " + path);
  return read_pnm(in);
}

void write_pnm(const Image& image, std::ostream& out) {
  if (image.width <= 0 || image.height <= 0 ||
      (image.channels != 1 && image.channels != 3) ||
      image.data.size() != static_cast<std::size_t>(image.width) *
                               image.height * image.channels)
    throw ShapeError("pnm: image buffer does not match its dimensions");
  out << (image.channels == 1 ? "P5" : "P6") << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
  if (!out) throw std::runtime_error("pnm: write failed");
}

void write_pnm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pnm: cannot open " + path);
  write_pnm(image, out);
}

}  // namespace fisheye
