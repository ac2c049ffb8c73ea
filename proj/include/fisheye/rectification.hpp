#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fisheye/image.hpp"
#include "fisheye/intrinsics.hpp"
#include "fisheye/types.hpp"

namespace fisheye {

enum class ViewportKind {
  Rectilinear,  ///< single pinhole plane
  Cylindrical,  ///< vertical-axis cylinder; verticals stay vertical
  Cube3,        ///< three pinhole faces at yaw -90/0/+90, side by side
};

ViewportKind viewport_kind_from_string(const std::string& name);
const char* to_string(ViewportKind kind);

/// Virtual output camera. `rotation` maps fisheye-frame vectors to the
/// virtual frame; the identity looks along the fisheye optical axis. The
/// output principal point sits at the raster center ((w-1)/2, (h-1)/2).
struct ViewportSpec {
  ViewportKind kind = ViewportKind::Rectilinear;
  int out_width = 0;
  int out_height = 0;
  double focal = 0;  // output pixels
  Mat3d rotation = Mat3d::Identity();
};

void validate(const ViewportSpec& spec);

/// Ray (virtual camera frame) seen at an output raster position.
Vec3d viewport_unproject(const ViewportSpec& spec, const Vec2d& p);

/// Output raster position of a ray in the virtual camera frame; inverse of
/// viewport_unproject. Throws DomainError for rays the viewport cannot show.
Vec2d viewport_project(const ViewportSpec& spec, const Vec3d& ray);

/// Per-output-pixel source coordinates (fisheye pixels) plus validity mask.
/// valid is false where the back-projected ray leaves the fisheye model's
/// projectable set or the source sample falls outside the raster (samples
/// within 0.5 px of the border are clamped onto it).
struct RemapTable {
  int out_width = 0;
  int out_height = 0;
  int src_width = 0;   // 0 when unknown (e.g. loaded from file)
  int src_height = 0;
  std::vector<float> src_x;
  std::vector<float> src_y;
  std::vector<std::uint8_t> valid;

  std::size_t size() const {
    return static_cast<std::size_t>(out_width) * out_height;
  }
};

RemapTable build_remap(const Camerad& intr, const ViewportSpec& spec);

/// Bilinear resampling of `image` through `table`; invalid pixels get `fill`.
Image warp(const Image& image, const RemapTable& table, std::uint8_t fill = 0);

/// Binary remap-table format: magic "FRMP", u32 version=1, u32 width,
/// u32 height, then width*height little-endian records of
/// (f32 src_x, f32 src_y, u8 valid), row-major.
void save_remap(const RemapTable& table, std::ostream& out);
void save_remap(const RemapTable& table, const std::string& path);
RemapTable load_remap(std::istream& in);
RemapTable load_remap(const std::string& path);

}  // namespace fisheye
