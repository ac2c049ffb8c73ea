#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fisheye/rectification.hpp"

using namespace fisheye;

namespace {

constexpr double kPi = std::numbers::pi;

Camerad fisheye190() {
  // 190-degree equidistant camera: image radius 300 * (95 deg) ~ 497 px.
  return Camerad(Equidistant<double>{1.0}, 499.5, 499.5, 300.0, 1000, 1000);
}

Mat3d yaw(double a) {
  Mat3d r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

Image random_image(int w, int h, int channels, unsigned seed) {
  Image img(w, h, channels);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(byte(rng));
  return img;
}

}  // namespace

TEST_CASE("viewport unprojection") {
  ViewportSpec rect{ViewportKind::Rectilinear, 641, 481, 300.0};
  CHECK((viewport_unproject(rect, Vec2d(320, 240)) - Vec3d(0, 0, 1)).norm() <
        1e-15);

  ViewportSpec cyl{ViewportKind::Cylindrical, 641, 481, 100.0};
  const Vec3d r = viewport_unproject(cyl, Vec2d(320 + 100, 240));
  CHECK(std::atan2(r.x(), r.z()) == doctest::Approx(1.0).epsilon(1e-15));

  ViewportSpec cube{ViewportKind::Cube3, 303, 101, 50.0};
  CHECK((viewport_unproject(cube, Vec2d(151, 50)) - Vec3d(0, 0, 1)).norm() <
        1e-15);
  CHECK((viewport_unproject(cube, Vec2d(50, 50)) - Vec3d(-1, 0, 0)).norm() <
        1e-15);
  CHECK((viewport_unproject(cube, Vec2d(252, 50)) - Vec3d(1, 0, 0)).norm() <
        1e-15);
}

TEST_CASE("viewport projection inverts unprojection") {
  for (ViewportKind kind : {ViewportKind::Rectilinear,
                            ViewportKind::Cylindrical, ViewportKind::Cube3}) {
    ViewportSpec spec{kind, 303, 201, 80.0};
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ux(0.0, 302.0);
    std::uniform_real_distribution<double> uy(0.0, 200.0);
    for (int i = 0; i < 500; ++i) {
      const Vec2d p(ux(rng), uy(rng));
      const Vec2d back = viewport_project(spec, viewport_unproject(spec, p));
      CHECK((back - p).norm() <= 1e-9);
    }
  }
}

TEST_CASE("identity remap is byte-exact") {
  const Camerad cam(Pinhole<double>{1.0}, 319.5, 239.5, 280.0, 640, 480);
  ViewportSpec spec{ViewportKind::Rectilinear, 640, 480, 280.0};
  const RemapTable table = build_remap(cam, spec);
  for (int y = 0; y < 480; ++y) {
    for (int x = 0; x < 640; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 640 + x;
      REQUIRE(table.valid[i]);
      CHECK(std::abs(table.src_x[i] - x) <= 1e-4f);
      CHECK(std::abs(table.src_y[i] - y) <= 1e-4f);
    }
  }
  // the resampled image is nevertheless byte-identical
  const Image img = random_image(640, 480, 1, 3);
  CHECK(warp(img, table) == img);
}

TEST_CASE("mask correctness") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Rectilinear, 240, 180, 90.0, yaw(0.9)};
  const RemapTable table = build_remap(cam, spec);
  int valid_count = 0, invalid_count = 0;
  for (int y = 0; y < spec.out_height; ++y) {
    for (int x = 0; x < spec.out_width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * spec.out_width + x;
      const Vec3d ray =
          spec.rotation.transpose() * viewport_unproject(spec, Vec2d(x, y));
      bool expect = domain_contains(cam.model, ray);
      if (expect) {
        const Vec2d src = project(cam, ray);
        expect = src.x() >= -0.5 && src.x() <= cam.width - 0.5 &&
                 src.y() >= -0.5 && src.y() <= cam.height - 0.5;
      }
      CHECK(bool(table.valid[i]) == expect);
      if (table.valid[i]) {
        CHECK(table.src_x[i] >= 0.f);
        CHECK(table.src_x[i] <= float(cam.width - 1));
        CHECK(table.src_y[i] >= 0.f);
        CHECK(table.src_y[i] <= float(cam.height - 1));
        ++valid_count;
      } else {
        ++invalid_count;
      }
    }
  }
  // the rotated viewport must straddle the image border for this to test both
  CHECK(valid_count > 0);
  CHECK(invalid_count > 0);
}

TEST_CASE("rectilinear viewport cannot reach the far half of a 190-degree "
          "fisheye") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Rectilinear, 400, 300, 60.0};
  const RemapTable table = build_remap(cam, spec);
  double max_theta = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table.valid[i]) continue;
    const Vec3d ray =
        unproject(cam, Vec2d(table.src_x[i], table.src_y[i]));
    max_theta = std::max(max_theta,
                         std::atan2(std::hypot(ray.x(), ray.y()), ray.z()));
  }
  CHECK(max_theta < kPi / 2);
  // while the fisheye itself records content out to 95 degrees
  CHECK(image_domain_contains(cam, Vec2d(499.5 + 300 * (95.0 / 180.0 * kPi),
                                         499.5)));
}

TEST_CASE("cylindrical viewport centers on the distortion center") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Cylindrical, 901, 701, 300.0};
  const RemapTable table = build_remap(cam, spec);
  const std::size_t center =
      static_cast<std::size_t>(350) * spec.out_width + 450;
  REQUIRE(table.valid[center]);
  CHECK(table.src_x[center] == doctest::Approx(499.5).epsilon(1e-6));
  CHECK(table.src_y[center] == doctest::Approx(499.5).epsilon(1e-6));
}

TEST_CASE("verticality of the cylindrical mapping (continuous)") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Cylindrical, 901, 701, 300.0};
  double min_u = 1e30, max_u = -1e30;
  for (int i = 0; i <= 200; ++i) {
    const Vec3d p(0.3, -1.0 + 2.0 * i / 200, 0.4);
    const Vec3d ray = unproject(cam, project(cam, p));
    const Vec2d out = viewport_project(spec, spec.rotation * ray);
    min_u = std::min(min_u, out.x());
    max_u = std::max(max_u, out.x());
  }
  CHECK(max_u - min_u <= 1e-9);
}

TEST_CASE("straightness of the rectilinear mapping (continuous)") {
  const Camerad cam(Stereographic<double>{1.0}, 499.5, 499.5, 300.0, 1000,
                    1000);
  ViewportSpec spec{ViewportKind::Rectilinear, 800, 600, 250.0};
  std::vector<Vec2d> out;
  for (int i = 0; i <= 100; ++i) {
    const Vec3d p = Vec3d(-0.4, -0.2, 1.0) +
                    (i / 100.0) * Vec3d(0.8, 0.45, 0.3);
    const Vec3d ray = unproject(cam, project(cam, p));
    out.push_back(viewport_project(spec, spec.rotation * ray));
  }
  const Vec2d a = out.front(), b = out.back();
  const Vec2d dir = (b - a).normalized();
  for (const auto& p : out) {
    const Vec2d d = p - a;
    const double perp = std::abs(d.x() * dir.y() - d.y() * dir.x());
    CHECK(perp <= 1e-6);
  }
}

TEST_CASE("warp basics") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Cylindrical, 300, 200, 120.0};
  const RemapTable table = build_remap(cam, spec);

  Image constant(1000, 1000, 3, 77);
  const Image out = warp(constant, table, 0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * out.width + x;
      const std::uint8_t expect = table.valid[i] ? 77 : 0;
      CHECK(out.at(x, y, 0) == expect);
      CHECK(out.at(x, y, 2) == expect);
    }

  Image wrong(640, 480, 1);
  CHECK_THROWS_AS((void)warp(wrong, table), ShapeError);
}

TEST_CASE("remap construction is deterministic") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Cube3, 330, 200, 55.0, yaw(0.25)};
  const RemapTable a = build_remap(cam, spec);
  const RemapTable b = build_remap(cam, spec);
  CHECK(a.src_x == b.src_x);
  CHECK(a.src_y == b.src_y);
  CHECK(a.valid == b.valid);
}

TEST_CASE("remap file round trip") {
  const Camerad cam = fisheye190();
  ViewportSpec spec{ViewportKind::Rectilinear, 64, 48, 30.0, yaw(1.1)};
  const RemapTable table = build_remap(cam, spec);
  std::stringstream ss;
  save_remap(table, ss);
  // header (16 bytes) plus 9 bytes per record
  CHECK(ss.str().size() == 16 + table.size() * 9);
  CHECK(ss.str().substr(0, 4) == "FRMP");
  const RemapTable back = load_remap(ss);
  CHECK(back.out_width == table.out_width);
  CHECK(back.out_height == table.out_height);
  CHECK(back.src_x == table.src_x);
  CHECK(back.src_y == table.src_y);
  CHECK(back.valid == table.valid);

  std::stringstream bad("NOPE");
  CHECK_THROWS(load_remap(bad));
}

TEST_CASE("viewport validation") {
  ViewportSpec spec{ViewportKind::Cube3, 301, 100, 50.0};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);  // width % 3 != 0
  spec.out_width = 300;
  CHECK_NOTHROW(validate(spec));
  spec.focal = 0.0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec.focal = 50.0;
  spec.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}
