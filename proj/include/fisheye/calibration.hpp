#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fisheye/intrinsics.hpp"
#include "fisheye/types.hpp"

namespace fisheye {

struct Correspondence {
  Vec3d world;   // target frame
  Vec2d pixel;   // observed pixels
  int view_id = 0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> items;
  int n_views = 0;
};

/// Throws unless every view_id is in range and every view has >= 6 points.
void validate(const CorrespondenceSet& data);

/// Rigid target-to-camera transform: X_cam = rotation * world + translation.
struct ViewPose {
  Mat3d rotation = Mat3d::Identity();
  Vec3d translation = Vec3d::Zero();
};

Mat3d so3_exp(const Vec3d& w);
Vec3d so3_log(const Mat3d& rotation);

/// Residual vector with two entries (du, dv, in pixels) per correspondence.
/// Points that leave the model's projectable set contribute a finite penalty
/// of 1e3 px (growing with the violation, so descent steers them back).
Eigen::VectorXd reprojection_residuals(const Camerad& intr,
                                       const std::vector<ViewPose>& poses,
                                       const CorrespondenceSet& data);

/// Central-difference Jacobian of the reprojection residuals with respect to
/// the packed parameter vector [model params..., cx, cy, per-view axis-angle
/// and translation]. This is exactly the Jacobian the optimizer uses.
Eigen::MatrixXd reprojection_jacobian(const Camerad& intr,
                                      const std::vector<ViewPose>& poses,
                                      const CorrespondenceSet& data);

/// Packed parameter layout used by fit() and reprojection_jacobian().
Eigen::VectorXd pack_parameters(const Camerad& intr,
                                const std::vector<ViewPose>& poses);
void unpack_parameters(const Eigen::VectorXd& p, const Camerad& tmpl,
                       int n_views, Camerad* intr,
                       std::vector<ViewPose>* poses);

struct FitOptions {
  double lambda0 = 1e-3;
  int max_iterations = 100;
  double step_tol = 1e-10;   // relative step length
  double cost_tol = 1e-12;   // relative cost decrease
  /// Called after every accepted step with (iteration, cost).
  std::function<void(int, double)> observer;
};

struct FitResult {
  Camerad intrinsics;
  std::vector<ViewPose> poses;
  double rmse = 0;       // pixels, per residual component
  int iterations = 0;
  bool converged = false;
};

/// Fits the model parameters, distortion center and per-view poses to the
/// correspondences by Levenberg-Marquardt on the reprojection error.
/// When init is absent, the center starts at the raster midpoint and the
/// focal comes from a 1-D grid search with per-view pose refits.
FitResult fit(const CorrespondenceSet& data, ModelKind family,
              const std::optional<Camerad>& init = std::nullopt,
              const FitOptions& options = {});

struct GridSpec {
  int nx = 8;
  int ny = 6;
  double spacing = 0.1;  // world units
};

/// Projects a centered planar nx-by-ny target under each pose and adds
/// N(0, sigma^2) pixel noise per axis. Deterministic for a fixed seed.
CorrespondenceSet generate_synthetic(const Camerad& intr,
                                     const std::vector<ViewPose>& poses,
                                     const GridSpec& grid, double noise_sigma,
                                     std::uint64_t seed = 0);

/// Text correspondence format: one `view_id wx wy wz u v` line per point,
/// whitespace-separated, with '#' starting a comment.
CorrespondenceSet read_correspondences(std::istream& in);
void write_correspondences(const CorrespondenceSet& data, std::ostream& out);

}  // namespace fisheye
