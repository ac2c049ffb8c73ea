#include "fisheye/rectification.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fisheye {

ViewportKind viewport_kind_from_string(const std::string& name) {
  if (name == "rectilinear") return ViewportKind::Rectilinear;
  if (name == "cylindrical") return ViewportKind::Cylindrical;
  if (name == "cube3") return ViewportKind::Cube3;
  throw std::invalid_argument("unknown viewport kind: " + name);
}

const char* to_string(ViewportKind kind) {
  switch (kind) {
    case ViewportKind::Rectilinear: return "rectilinear";
    case ViewportKind::Cylindrical: return "cylindrical";
    case ViewportKind::Cube3: return "cube3";
  }
  return "unknown";
}

void validate(const ViewportSpec& spec) {
  if (spec.out_width <= 0 || spec.out_height <= 0)
    throw std::invalid_argument("viewport: output size must be positive");
  if (!(spec.focal > 0))
    throw std::invalid_argument("viewport: focal must be > 0");
  if (((spec.rotation.transpose() * spec.rotation) - Mat3d::Identity())
          .cwiseAbs()
          .maxCoeff() > 1e-10 ||
      spec.rotation.determinant() < 0)
    throw std::invalid_argument("viewport: rotation not orthonormal");
  if (spec.kind == ViewportKind::Cube3 && spec.out_width % 3 != 0)
    throw std::invalid_argument("viewport: cube3 width must be divisible by 3");
}

namespace {

Mat3d yaw_rotation(double angle) {
  Mat3d r;
  r << std::cos(angle), 0, std::sin(angle), 0, 1, 0, -std::sin(angle), 0,
      std::cos(angle);
  return r;
}

}  // namespace

Vec3d viewport_unproject(const ViewportSpec& spec, const Vec2d& p) {
  const double cy = (spec.out_height - 1) / 2.0;
  switch (spec.kind) {
    case ViewportKind::Rectilinear: {
      const double cx = (spec.out_width - 1) / 2.0;
      return Vec3d((p.x() - cx) / spec.focal, (p.y() - cy) / spec.focal, 1.0)
          .normalized();
    }
    case ViewportKind::Cylindrical: {
      const double cx = (spec.out_width - 1) / 2.0;
      const double phi = (p.x() - cx) / spec.focal;
      const double h = (p.y() - cy) / spec.focal;
      return Vec3d(std::sin(phi), h, std::cos(phi)).normalized();
    }
    case ViewportKind::Cube3: {
      const int face_w = spec.out_width / 3;
      int face = static_cast<int>(p.x() / face_w);
      if (face < 0) face = 0;
      if (face > 2) face = 2;
      const double cx = face * face_w + (face_w - 1) / 2.0;
      const Vec3d local =
          Vec3d((p.x() - cx) / spec.focal, (p.y() - cy) / spec.focal, 1.0)
              .normalized();
      return yaw_rotation((face - 1) * std::numbers::pi / 2.0) * local;
    }
  }
  throw std::logic_error("viewport_unproject: bad kind");
}

Vec2d viewport_project(const ViewportSpec& spec, const Vec3d& ray) {
  const double cy = (spec.out_height - 1) / 2.0;
  switch (spec.kind) {
    case ViewportKind::Rectilinear: {
      if (!(ray.z() > 0))
        throw DomainError("viewport_project: ray behind the rectilinear plane");
      const double cx = (spec.out_width - 1) / 2.0;
      return Vec2d(cx + spec.focal * ray.x() / ray.z(),
                   cy + spec.focal * ray.y() / ray.z());
    }
    case ViewportKind::Cylindrical: {
      const double d = std::hypot(ray.x(), ray.z());
      if (d <= 0)
        throw DomainError("viewport_project: ray along the cylinder axis");
      const double cx = (spec.out_width - 1) / 2.0;
      return Vec2d(cx + spec.focal * std::atan2(ray.x(), ray.z()),
                   cy + spec.focal * ray.y() / d);
    }
    case ViewportKind::Cube3: {
      const int face_w = spec.out_width / 3;
      // Pick the face whose axis is closest to the ray.
      const double phi = std::atan2(ray.x(), ray.z());
      int face = 1;
      if (phi < -std::numbers::pi / 4) face = 0;
      if (phi > std::numbers::pi / 4) face = 2;
      const Vec3d local =
          yaw_rotation(-(face - 1) * std::numbers::pi / 2.0) * ray;
      if (!(local.z() > 0))
        throw DomainError("viewport_project: ray behind the cube face");
      const double cx = face * face_w + (face_w - 1) / 2.0;
      return Vec2d(cx + spec.focal * local.x() / local.z(),
                   cy + spec.focal * local.y() / local.z());
    }
  }
  throw std::logic_error("viewport_project: bad kind");
}

RemapTable build_remap(const Camerad& intr, const ViewportSpec& spec) {
  validate(spec);
  RemapTable table;
  table.out_width = spec.out_width;
  table.out_height = spec.out_height;
  table.src_width = intr.width;
  table.src_height = intr.height;
  table.src_x.assign(table.size(), 0.f);
  table.src_y.assign(table.size(), 0.f);
  table.valid.assign(table.size(), 0);

  const Mat3d to_fisheye = spec.rotation.transpose();
  const double x_hi = intr.width - 1.0;
  const double y_hi = intr.height - 1.0;
  for (int y = 0; y < spec.out_height; ++y) {
    for (int x = 0; x < spec.out_width; ++x) {
      const std::size_t idx =
          static_cast<std::size_t>(y) * spec.out_width + x;
      const Vec3d ray =
          to_fisheye * viewport_unproject(spec, Vec2d(x, y));
      if (!domain_contains(intr.model, ray)) continue;
      const Vec2d src = project(intr, ray);
      double sx = src.x();
      double sy = src.y();
      // Samples just past the border (within half a pixel) are clamped.
      if (sx < -0.5 || sx > x_hi + 0.5 || sy < -0.5 || sy > y_hi + 0.5)
        continue;
      sx = std::min(std::max(sx, 0.0), x_hi);
      sy = std::min(std::max(sy, 0.0), y_hi);
      table.src_x[idx] = static_cast<float>(sx);
      table.src_y[idx] = static_cast<float>(sy);
      table.valid[idx] = 1;
    }
  }
  return table;
}

Image warp(const Image& image, const RemapTable& table, std::uint8_t fill) {
  if (table.src_width > 0 &&
      (image.width != table.src_width || image.height != table.src_height))
    throw ShapeError("warp: image size does not match the remap table source");
  Image out(table.out_width, table.out_height, image.channels, fill);
  for (int y = 0; y < table.out_height; ++y) {
    for (int x = 0; x < table.out_width; ++x) {
      const std::size_t idx =
          static_cast<std::size_t>(y) * table.out_width + x;
      if (!table.valid[idx]) continue;
      const double sx = table.src_x[idx];
      const double sy = table.src_y[idx];
      const int x0 = std::min(static_cast<int>(sx), image.width - 1);
      const int y0 = std::min(static_cast<int>(sy), image.height - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < image.channels; ++c) {
        const double v00 = image.at(x0, y0, c);
        const double v10 = image.at(x1, y0, c);
        const double v01 = image.at(x0, y1, c);
        const double v11 = image.at(x1, y1, c);
        const double v = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                         fy * ((1 - fx) * v01 + fx * v11);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'F', 'R', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::uint8_t b[4] = {
      static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
      static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t f32_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

float bits_f32(std::uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

void save_remap(const RemapTable& table, std::ostream& out) {
  if (table.src_x.size() != table.size() ||
      table.src_y.size() != table.size() || table.valid.size() != table.size())
    throw ShapeError("save_remap: table arrays do not match its dimensions");
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(table.out_width));
  put_u32(out, static_cast<std::uint32_t>(table.out_height));
  for (std::size_t i = 0; i < table.size(); ++i) {
    put_u32(out, f32_bits(table.src_x[i]));
    put_u32(out, f32_bits(table.src_y[i]));
    out.put(static_cast<char>(table.valid[i] ? 1 : 0));
  }
  if (!out) throw std::runtime_error("save_remap: write failed");
}

void save_remap(const RemapTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_remap: cannot open " + path);
  save_remap(table, out);
}

RemapTable load_remap(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_remap: bad magic");
  if (get_u32(in) != kVersion)
    throw std::runtime_error("load_remap: unsupported version");
  RemapTable table;
  table.out_width = static_cast<int>(get_u32(in));
  table.out_height = static_cast<int>(get_u32(in));
  if (table.out_width <= 0 || table.out_height <= 0 ||
      static_cast<std::int64_t>(table.out_width) * table.out_height >
          (std::int64_t(1) << 32))
    throw std::runtime_error("load_remap: implausible dimensions");
  table.src_x.resize(table.size());
  table.src_y.resize(table.size());
  table.valid.resize(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    table.src_x[i] = bits_f32(get_u32(in));
    table.src_y[i] = bits_f32(get_u32(in));
    table.valid[i] = static_cast<std::uint8_t>(in.get() ? 1 : 0);
  }
  if (!in) throw std::runtime_error("load_remap: truncated data");
  return table;
}

RemapTable load_remap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_remap: cannot open " + path);
  return load_remap(in);
}

}  // namespace fisheye
