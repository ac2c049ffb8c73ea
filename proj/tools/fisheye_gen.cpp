// Synthetic data generator for the test and example pipelines: calibration
// correspondence files, rendered vertical-pole fisheye images, and ideal
// epipolar pixel pairs.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fisheye/calibration.hpp"
#include "fisheye/camera_io.hpp"
#include "fisheye/epipolar.hpp"
#include "fisheye/image.hpp"
#include "fisheye/intrinsics.hpp"

namespace {

using namespace fisheye;

std::vector<ViewPose> standard_poses(int n_views, double distance) {
  std::vector<ViewPose> poses(n_views);
  for (int v = 0; v < n_views; ++v) {
    const Vec3d axis(0.22 * std::sin(1.3 * v + 0.4),
                     0.20 * std::cos(0.9 * v + 1.1), 0.08 * std::sin(2.1 * v));
    poses[v].rotation = so3_exp(axis);
    poses[v].translation = Vec3d(0.06 * std::sin(2.0 * v + 0.3),
                                 0.05 * std::cos(1.7 * v),
                                 distance * (1.0 + 0.1 * (v % 3)));
  }
  return poses;
}

int run_corr(const std::string& camera_path, int views, int nx, int ny,
             double spacing, double distance, double sigma,
             std::uint64_t seed) {
  const Camerad intr = load_camera(camera_path);
  const auto poses = standard_poses(views, distance);
  const CorrespondenceSet data =
      generate_synthetic(intr, poses, GridSpec{nx, ny, spacing}, sigma, seed);
  write_correspondences(data, std::cout);
  return 0;
}

int run_pole(const std::string& camera_path, double pole_x, double pole_z,
             const std::string& out_path) {
  const Camerad intr = load_camera(camera_path);
  Image img(intr.width, intr.height, 1, 0);
  std::vector<double> accum(img.data.size(), 0.0);

  // Splat a dense sampling of the 3D vertical line x = pole_x, z = pole_z
  // with a small Gaussian footprint.
  const int samples = 20000;
  for (int i = 0; i <= samples; ++i) {
    const double y = -2.0 + 4.0 * i / samples;
    const Vec3d p(pole_x, y, pole_z);
    if (!domain_contains(intr.model, p)) continue;
    const Vec2d px = project(intr, p);
    const int x0 = static_cast<int>(std::floor(px.x())) - 2;
    const int y0 = static_cast<int>(std::floor(px.y())) - 2;
    for (int yy = y0; yy < y0 + 5; ++yy) {
      for (int xx = x0; xx < x0 + 5; ++xx) {
        if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) continue;
        const double d2 = (xx - px.x()) * (xx - px.x()) +
                          (yy - px.y()) * (yy - px.y());
        accum[static_cast<std::size_t>(yy) * img.width + xx] +=
            std::exp(-d2 / 0.8);
      }
    }
  }
  for (std::size_t i = 0; i < accum.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(
        std::lround(255.0 * std::min(1.0, accum[i] / 4.0)));
  write_pnm(img, out_path);
  return 0;
}

int run_pairs(const std::string& cam1_path, const std::string& cam2_path,
              const std::string& pose_out, int count, double noise_rad,
              std::uint64_t seed) {
  const Camerad cam1 = load_camera(cam1_path);
  const Camerad cam2 = load_camera(cam2_path);

  const Mat3d rotation = so3_exp(Vec3d(0.06, -0.11, 0.04));
  const Vec3d translation = Vec3d(0.8, 0.15, 0.25).normalized();
  const RelativePosed pose(rotation, translation);
  {
    nlohmann::json j;
    j["rotation"] = {
        {rotation(0, 0), rotation(0, 1), rotation(0, 2)},
        {rotation(1, 0), rotation(1, 1), rotation(1, 2)},
        {rotation(2, 0), rotation(2, 1), rotation(2, 2)}};
    j["translation"] = {pose.translation.x(), pose.translation.y(),
                        pose.translation.z()};
    std::ofstream out(pose_out);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", pose_out.c_str());
      return 2;
    }
    out << j.dump(2) << "\n";
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int emitted = 0;
  std::printf("# u1 v1 u2 v2\n");
  while (emitted < count) {
    Vec3d p(unit(rng) * 2.0, unit(rng) * 2.0, 3.0 + 2.0 * unit(rng));
    Vec3d p2 = pose.rotation * p + pose.translation;
    if (!domain_contains(cam1.model, p) || !domain_contains(cam2.model, p2))
      continue;
    if (noise_rad > 0) {
      p2 = so3_exp(Vec3d(gauss(rng), gauss(rng), gauss(rng)).normalized() *
                   noise_rad * std::abs(gauss(rng))) *
           p2;
      if (!domain_contains(cam2.model, p2)) continue;
    }
    const Vec2d u1 = project(cam1, p);
    const Vec2d u2 = project(cam2, p2);
    if (u1.x() < 0 || u1.x() >= cam1.width || u1.y() < 0 ||
        u1.y() >= cam1.height)
      continue;
    if (u2.x() < 0 || u2.x() >= cam2.width || u2.y() < 0 ||
        u2.y() >= cam2.height)
      continue;
    std::printf("%.12f %.12f %.12f %.12f\n", u1.x(), u1.y(), u2.x(), u2.y());
    ++emitted;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic data generator for the fisheye toolkit"};
  app.require_subcommand(1);

  std::string camera_path, camera2_path, out_path = "pose.json";
  int views = 3, nx = 8, ny = 6, count = 100;
  double spacing = 0.1, distance = 0.5, sigma = 0.0, noise = 0.0;
  std::uint64_t seed = 1;

  auto* corr = app.add_subcommand("corr", "checkerboard-style correspondences");
  corr->add_option("--camera", camera_path)->required();
  corr->add_option("--views", views);
  corr->add_option("--nx", nx);
  corr->add_option("--ny", ny);
  corr->add_option("--spacing", spacing);
  corr->add_option("--distance", distance);
  corr->add_option("--noise", sigma);
  corr->add_option("--seed", seed);

  double pole_x = 0.3, pole_z = 0.4;
  std::string img_out = "pole.pgm";
  auto* pole = app.add_subcommand("pole", "render a 3D vertical pole");
  pole->add_option("--camera", camera_path)->required();
  pole->add_option("--x", pole_x);
  pole->add_option("--z", pole_z);
  pole->add_option("--out", img_out);

  auto* pairs = app.add_subcommand("pairs", "epipolar pixel pairs");
  pairs->add_option("--camera1", camera_path)->required();
  pairs->add_option("--camera2", camera2_path)->required();
  pairs->add_option("--pose-out", out_path);
  pairs->add_option("--count", count);
  pairs->add_option("--noise", noise);
  pairs->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (corr->parsed())
      return run_corr(camera_path, views, nx, ny, spacing, distance, sigma,
                      seed);
    if (pole->parsed()) return run_pole(camera_path, pole_x, pole_z, img_out);
    if (pairs->parsed())
      return run_pairs(camera_path, camera2_path, out_path, count, noise,
                       seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
