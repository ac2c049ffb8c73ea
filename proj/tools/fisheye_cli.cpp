// Batch front end: model conversion and verification, calibration from
// correspondence files, image rectification, and epipolar diagnostics.
//
// Exit codes: 0 success, 1 verification-tolerance failure, 2 usage or input
// error, 3 numeric non-convergence.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fisheye/calibration.hpp"
#include "fisheye/camera_io.hpp"
#include "fisheye/epipolar.hpp"
#include "fisheye/equivalence.hpp"
#include "fisheye/image.hpp"
#include "fisheye/intrinsics.hpp"
#include "fisheye/rectification.hpp"

namespace {

using namespace fisheye;

int run_table1() {
  std::printf("omega   f_p     f_e     max_error\n");
  bool ok = true;
  for (double omega : {0.93, 0.92, 0.95, 0.90}) {
    const auto pair = fov_to_equidistant(omega);
    const ModelParamsd fov = FieldOfView<double>{omega, 1.0};
    const ModelParamsd composite = pair.composite();
    const auto report =
        verify_equivalence(fov, composite, 1000, EquivalenceMetric::OnImage);
    ok = ok && report.max_abs_error <= 1e-12;
    std::printf("%.2f    %.3f   %.3f   %.3e\n", omega, pair.f_p, pair.f_e,
                report.max_abs_error);
  }
  return ok ? 0 : 1;
}

int run_convert(const std::string& from_path, const std::string& to_kind) {
  const Camerad in = load_camera(from_path);
  const ModelKind from = model_kind(in.model);
  const ModelKind to = kind_from_string(to_kind);

  Camerad out = in;
  if (from == ModelKind::FieldOfView && to == ModelKind::Equidistant) {
    const auto& m = std::get<FieldOfView<double>>(in.model);
    const auto pair = fov_to_equidistant(m.omega);
    out.model = pair.composite();
    std::fprintf(stderr, "equidistant composite: f_p=%.6f f_e=%.6f\n",
                 pair.f_p, pair.f_e);
  } else if (from == ModelKind::Stereographic && to == ModelKind::Division) {
    const auto& m = std::get<Stereographic<double>>(in.model);
    out.model = stereographic_to_division(m.f);
  } else if (from == ModelKind::GeneralPerspective && to == ModelKind::Ucm) {
    const auto& m = std::get<GeneralPerspective<double>>(in.model);
    out.model = general_perspective_to_ucm(m.f_p, m.f_s, m.d);
  } else {
    std::fprintf(stderr, "unsupported conversion: %s -> %s\n",
                 to_string(from), to_string(to));
    return 2;
  }
  save_camera(out, std::cout);
  return 0;
}

int run_project(const std::string& camera_path, bool inverse) {
  const Camerad intr = load_camera(camera_path);
  std::string line;
  int line_no = 0;
  while (std::getline(std::cin, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    double a, b, c;
    const bool parsed =
        inverse ? static_cast<bool>(ls >> a >> b)
                : static_cast<bool>(ls >> a >> b >> c);
    std::string rest;
    if (!parsed || (ls >> rest)) {
      std::fprintf(stderr, "malformed input on line %d\n", line_no);
      return 2;
    }
    try {
      if (inverse) {
        const Vec3d ray = unproject(intr, Vec2d(a, b));
        std::printf("%.9g %.9g %.9g\n", ray.x(), ray.y(), ray.z());
      } else {
        const Vec2d px = project(intr, Vec3d(a, b, c));
        std::printf("%.9g %.9g\n", px.x(), px.y());
      }
    } catch (const DomainError&) {
      std::printf("INVALID\n");
    } catch (const DegenerateInput&) {
      std::printf("INVALID\n");
    }
  }
  return 0;
}

int run_calibrate(const std::string& model_kind_name,
                  const std::string& data_path,
                  const std::string& init_path) {
  const ModelKind family = kind_from_string(model_kind_name);
  std::ifstream in(data_path);
  if (!in) {
    std::fprintf(stderr, "cannot open %s\n", data_path.c_str());
    return 2;
  }
  const CorrespondenceSet data = read_correspondences(in);
  std::optional<Camerad> init;
  if (!init_path.empty()) init = load_camera(init_path);

  FitResult result;
  try {
    result = fit(data, family, init);
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  }
  std::fprintf(stderr,
               "views=%d points=%zu iterations=%d rmse=%.6e px converged=%s\n",
               data.n_views, data.items.size(), result.iterations, result.rmse,
               result.converged ? "yes" : "no");
  save_camera(result.intrinsics, std::cout);
  return result.converged ? 0 : 3;
}

int run_rectify(const std::string& camera_path, const std::string& kind_name,
                double focal, const std::string& size_str,
                const std::string& in_path, const std::string& out_path,
                const std::string& map_path) {
  const Camerad intr = load_camera(camera_path);
  int out_w = 0, out_h = 0;
  if (std::sscanf(size_str.c_str(), "%dx%d", &out_w, &out_h) != 2 ||
      out_w <= 0 || out_h <= 0) {
    std::fprintf(stderr, "bad --size, expected WxH\n");
    return 2;
  }
  const Image input = read_pnm(in_path);
  if (input.width != intr.width || input.height != intr.height) {
    std::fprintf(stderr,
                 "image size %dx%d does not match camera raster %dx%d\n",
                 input.width, input.height, intr.width, intr.height);
    return 2;
  }
  ViewportSpec spec;
  spec.kind = viewport_kind_from_string(kind_name);
  spec.out_width = out_w;
  spec.out_height = out_h;
  spec.focal = focal;
  const RemapTable table = build_remap(intr, spec);
  write_pnm(warp(input, table), out_path);
  if (!map_path.empty()) save_remap(table, map_path);
  return 0;
}

int run_epipolar(const std::string& cam1_path, const std::string& cam2_path,
                 const std::string& pose_path, const std::string& pairs_path) {
  const Camerad cam1 = load_camera(cam1_path);
  const Camerad cam2 = load_camera(cam2_path);
  const RelativePosed pose = load_relative_pose(pose_path);
  const EssentialMatrixd E = essential_from_pose(pose);

  std::ifstream in(pairs_path);
  if (!in) {
    std::fprintf(stderr, "cannot open %s\n", pairs_path.c_str());
    return 2;
  }
  std::string line;
  int line_no = 0, n = 0;
  double sum = 0, max_res = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    double u1, v1, u2, v2;
    std::string rest;
    if (!(ls >> u1 >> v1 >> u2 >> v2) || (ls >> rest)) {
      std::fprintf(stderr, "malformed pair on line %d\n", line_no);
      return 2;
    }
    double res;
    try {
      const Vec3d s1 = unproject(cam1, Vec2d(u1, v1));
      const Vec3d s2 = unproject(cam2, Vec2d(u2, v2));
      res = epipolar_residual(E, s1, s2);
    } catch (const DomainError& e) {
      std::fprintf(stderr, "line %d: %s\n", line_no, e.what());
      return 2;
    }
    std::printf("%.6e\n", res);
    sum += res;
    max_res = std::max(max_res, res);
    ++n;
  }
  if (n == 0) {
    std::fprintf(stderr, "no pairs in %s\n", pairs_path.c_str());
    return 2;
  }
  std::printf("pairs %d mean %.6e max %.6e\n", n, sum / n, max_res);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fisheye camera-geometry toolkit"};
  app.require_subcommand(1);

  auto* table1 = app.add_subcommand(
      "table1", "field-of-view vs. equidistant-composite verification table");

  std::string from_path, to_kind;
  auto* convert = app.add_subcommand("convert", "convert between equivalent models");
  convert->add_option("--from", from_path, "input camera JSON")->required();
  convert->add_option("--to", to_kind, "target model kind")->required();

  std::string camera_path;
  auto* project_cmd = app.add_subcommand("project", "project x y z lines from stdin");
  project_cmd->add_option("--camera", camera_path, "camera JSON")->required();
  auto* unproject_cmd = app.add_subcommand("unproject", "unproject u v lines from stdin");
  unproject_cmd->add_option("--camera", camera_path, "camera JSON")->required();

  std::string model_name, data_path, init_path;
  auto* calibrate = app.add_subcommand("calibrate", "fit a model to correspondences");
  calibrate->add_option("--model", model_name, "model family")->required();
  calibrate->add_option("--data", data_path, "correspondence file")->required();
  calibrate->add_option("--init", init_path, "initial camera JSON");

  std::string viewport_name, size_str, in_path, out_path, map_path;
  double focal = 0;
  auto* rectify = app.add_subcommand("rectify", "warp an image to a viewport");
  rectify->add_option("--camera", camera_path, "camera JSON")->required();
  rectify->add_option("--viewport", viewport_name, "rectilinear|cylindrical|cube3")->required();
  rectify->add_option("--focal", focal, "output focal in pixels")->required();
  rectify->add_option("--size", size_str, "output size WxH")->required();
  rectify->add_option("--in", in_path, "input PGM/PPM")->required();
  rectify->add_option("--out", out_path, "output PGM/PPM")->required();
  rectify->add_option("--save-map", map_path, "also write the FRMP remap table");

  std::string cam1_path, cam2_path, pose_path, pairs_path;
  auto* epipolar = app.add_subcommand("epipolar", "epipolar residual statistics");
  epipolar->add_option("--camera1", cam1_path, "camera 1 JSON")->required();
  epipolar->add_option("--camera2", cam2_path, "camera 2 JSON")->required();
  epipolar->add_option("--pose", pose_path, "relative pose JSON")->required();
  epipolar->add_option("--pairs", pairs_path, "pixel pair file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (table1->parsed()) return run_table1();
    if (convert->parsed()) return run_convert(from_path, to_kind);
    if (project_cmd->parsed()) return run_project(camera_path, false);
    if (unproject_cmd->parsed()) return run_project(camera_path, true);
    if (calibrate->parsed())
      return run_calibrate(model_name, data_path, init_path);
    if (rectify->parsed())
      return run_rectify(camera_path, viewport_name, focal, size_str, in_path,
                         out_path, map_path);
    if (epipolar->parsed())
      return run_epipolar(cam1_path, cam2_path, pose_path, pairs_path);
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
