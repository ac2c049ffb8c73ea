#pragma once

#include <cmath>
#include <stdexcept>

#include "fisheye/models.hpp"
#include "fisheye/types.hpp"

namespace fisheye {

/// A projection model plus the plumbing that ties it to a pixel raster:
/// distortion center (cx, cy), an isotropic image-plane-to-pixel scale, and
/// the raster size. The models themselves are purely radial about the center.
template <typename Scalar = double>
struct CameraIntrinsics {
  ModelParams<Scalar> model;
  Scalar cx = Scalar(0);
  Scalar cy = Scalar(0);
  Scalar pixel_scale = Scalar(1);
  int width = 1;
  int height = 1;

  CameraIntrinsics() : model(Pinhole<Scalar>{Scalar(1)}) {}

  CameraIntrinsics(ModelParams<Scalar> model_in, Scalar cx_in, Scalar cy_in,
                   Scalar pixel_scale_in, int width_in, int height_in)
      : model(std::move(model_in)),
        cx(cx_in),
        cy(cy_in),
        pixel_scale(pixel_scale_in),
        width(width_in),
        height(height_in) {
    validate(model);
    if (!(width > 0 && height > 0))
      throw std::invalid_argument("intrinsics: raster size must be positive");
    if (!(cx >= Scalar(0) && cx < Scalar(width)) ||
        !(cy >= Scalar(0) && cy < Scalar(height)))
      throw std::invalid_argument(
          "intrinsics: distortion center must lie inside the raster");
    if (!(pixel_scale > Scalar(0)))
      throw std::invalid_argument("intrinsics: pixel_scale must be > 0");
  }

  /// Unit-raster camera with the center at the origin; image points then
  /// coincide with the model's normalized image plane.
  static CameraIntrinsics normalized(ModelParams<Scalar> model_in) {
    return CameraIntrinsics(std::move(model_in), Scalar(0), Scalar(0),
                            Scalar(1), 1, 1);
  }

  Vec2<Scalar> pixel_from_plane(const Vec2<Scalar>& u) const {
    return Vec2<Scalar>(cx + pixel_scale * u.x(), cy + pixel_scale * u.y());
  }

  Vec2<Scalar> plane_from_pixel(const Vec2<Scalar>& p) const {
    return Vec2<Scalar>((p.x() - cx) / pixel_scale, (p.y() - cy) / pixel_scale);
  }
};

using Camerad = CameraIntrinsics<double>;

/// Projects a camera-frame point to pixel coordinates.
template <typename S>
Vec2<S> project(const CameraIntrinsics<S>& intr, const Vec3<S>& X) {
  return intr.pixel_from_plane(project(intr.model, X));
}

/// Lifts a pixel to the unit viewing sphere.
template <typename S>
Vec3<S> unproject(const CameraIntrinsics<S>& intr, const Vec2<S>& p) {
  return unproject(intr.model, intr.plane_from_pixel(p));
}

template <typename S>
bool image_domain_contains(const CameraIntrinsics<S>& intr, const Vec2<S>& p) {
  return image_domain_contains(intr.model, intr.plane_from_pixel(p));
}

}  // namespace fisheye
