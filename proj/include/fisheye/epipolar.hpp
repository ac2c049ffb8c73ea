#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fisheye/intrinsics.hpp"
#include "fisheye/models.hpp"
#include "fisheye/types.hpp"

namespace fisheye {

/// Rigid transform taking camera-1 coordinates to camera-2 coordinates,
/// X2 = R * X1 + t, with the translation normalized to unit length
/// (two-view geometry is scale-free).
template <typename S>
struct RelativePose {
  Mat3<S> rotation;
  Vec3<S> translation;

  RelativePose(const Mat3<S>& rotation_in, const Vec3<S>& translation_in)
      : rotation(rotation_in), translation(translation_in) {
    if (((rotation.transpose() * rotation) - Mat3<S>::Identity())
            .cwiseAbs()
            .maxCoeff() > S(1e-10) ||
        rotation.determinant() < S(0))
      throw std::invalid_argument("relative pose: rotation not orthonormal");
    const S n = translation.norm();
    if (!(n > S(0)))
      throw DegenerateInput("relative pose: zero baseline");
    translation /= n;
  }
};

using RelativePosed = RelativePose<double>;

template <typename S>
struct EssentialMatrix {
  Mat3<S> m;

  explicit EssentialMatrix(const Mat3<S>& m_in) : m(m_in) {
    Eigen::JacobiSVD<Mat3<S>> svd(m);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > S(0)) || sv(2) / sv(0) > S(1e-10) ||
        std::abs(sv(0) - sv(1)) / sv(0) > S(1e-10))
      throw std::invalid_argument(
          "essential matrix: singular values must be (s, s, 0)");
  }
};

using EssentialMatrixd = EssentialMatrix<double>;

template <typename S>
Mat3<S> skew(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0), -v.z(), v.y(), v.z(), S(0), -v.x(), -v.y(), v.x(), S(0);
  return m;
}

/// E = [t]x R; ideal ray pairs (s in camera 1, s' in camera 2) of one 3D
/// point satisfy s'^T E s = 0.
template <typename S>
EssentialMatrix<S> essential_from_pose(const RelativePose<S>& pose) {
  return EssentialMatrix<S>(skew(pose.translation) * pose.rotation);
}

/// Angular distance of s' to the epipolar plane of s. When s is an epipole
/// the whole pencil of planes contains it and the residual is defined as 0.
template <typename S>
S epipolar_residual(const EssentialMatrix<S>& E, const Vec3<S>& s,
                    const Vec3<S>& s_prime) {
  const Vec3<S> n = E.m * s;
  const S nn = n.norm();
  if (nn < S(1e-14)) return S(0);
  const S v = std::min(std::abs(s_prime.dot(n)) / nn, S(1));
  return std::asin(v);
}

/// Midpoint of the common perpendicular between the two viewing rays,
/// expressed in the camera-1 frame.
template <typename S>
Vec3<S> triangulate_midpoint(const Vec3<S>& s, const Vec3<S>& s_prime,
                             const RelativePose<S>& pose) {
  const Vec3<S> d1 = s.normalized();
  const Vec3<S> d2 = (pose.rotation.transpose() * s_prime).normalized();
  if (d1.cross(d2).norm() < S(1e-8))
    throw DegenerateInput("triangulate_midpoint: rays (near-)parallel");
  const Vec3<S> o2 = -(pose.rotation.transpose() * pose.translation);
  const S c = d1.dot(d2);
  const S e1 = o2.dot(d1);
  const S e2 = o2.dot(d2);
  const S den = S(1) - c * c;
  const S a = (e1 - c * e2) / den;
  const S b = (c * e1 - e2) / den;
  const Vec3<S> p1 = a * d1;
  const Vec3<S> p2 = o2 + b * d2;
  return (p1 + p2) / S(2);
}

/// The two image points where parallel 3D lines of the given direction
/// converge. Either antipode is reported only when projectable.
template <typename S>
struct VanishingPoints {
  std::optional<Vec2<S>> forward;   ///< projection of +direction
  std::optional<Vec2<S>> backward;  ///< projection of -direction
};

template <typename S>
VanishingPoints<S> vanishing_points(const CameraIntrinsics<S>& intr,
                                    const Vec3<S>& direction) {
  if (!(direction.norm() > S(0)))
    throw DegenerateInput("vanishing_points: zero direction");
  VanishingPoints<S> vp;
  const Vec3<S> d = direction.normalized();
  if (domain_contains(intr.model, d)) vp.forward = project(intr, d);
  if (domain_contains(intr.model, Vec3<S>(-d)))
    vp.backward = project(intr, Vec3<S>(-d));
  if (!vp.forward && !vp.backward)
    throw DomainError("vanishing_points: neither antipode is projectable");
  return vp;
}

namespace detail {

// Valid sub-arcs of phi where cos(phi - psi) * amp > cos_cap, i.e. where the
// swept unit direction stays inside the model's field-angle cap.
template <typename S>
struct CapArc {
  bool all = false;
  bool none = false;
  S psi = S(0);
  S half_width = S(0);
};

template <typename S>
CapArc<S> cap_arc(S e1z, S e2z, S cos_cap) {
  CapArc<S> arc;
  const S amp = std::hypot(e1z, e2z);
  if (amp < S(1e-300)) {
    // Direction circle lies in the z = 0 plane.
    if (cos_cap < S(0))
      arc.all = true;
    else
      arc.none = true;
    return arc;
  }
  const S q = cos_cap / amp;
  if (q <= S(-1)) {
    arc.all = true;
  } else if (q >= S(1)) {
    arc.none = true;
  } else {
    arc.psi = std::atan2(e2z, e1z);
    arc.half_width = std::acos(q);
  }
  return arc;
}

// Projects the swept direction at phi; a sample landing exactly on the cap
// boundary (e.g. the antipodal axis point of a full-sphere model) is nudged
// inward by a deterministic offset.
template <typename S, typename DirFn>
Vec2<S> project_swept(const CameraIntrinsics<S>& intr, DirFn&& dir_at, S phi,
                      S nudge) {
  Vec3<S> u = dir_at(phi);
  if (!domain_contains(intr.model, u)) u = dir_at(phi + nudge);
  return project(intr, u);
}

}  // namespace detail

/// Projects n samples of a 3D line, spanning the part of the line inside the
/// model's projectable set; for lines fully inside, the end samples approach
/// the two vanishing points of the line direction.
template <typename S>
std::vector<Vec2<S>> line_image_samples(const CameraIntrinsics<S>& intr,
                                        const Vec3<S>& point,
                                        const Vec3<S>& direction, int n) {
  if (n < 5)
    throw std::invalid_argument("line_image_samples: need n >= 5");
  const Vec3<S> e1 = direction.normalized();
  const Vec3<S> perp = point - point.dot(e1) * e1;
  if (perp.norm() < S(1e-12))
    throw DegenerateInput("line_image_samples: line through the camera center");
  const Vec3<S> e2 = perp.normalized();

  // Ray directions of the line points sweep the half great circle
  // u(phi) = cos(phi) e1 + sin(phi) e2, phi in (0, pi).
  const S cos_cap = std::cos(theta_max(intr.model));
  const auto arc = detail::cap_arc(e1.z(), e2.z(), cos_cap);
  if (arc.none)
    throw DomainError("line_image_samples: no line point is projectable");

  std::vector<std::pair<S, S>> spans;
  const S pi = std::numbers::pi_v<S>;
  if (arc.all) {
    spans.emplace_back(S(0), pi);
  } else {
    for (int k = -1; k <= 1; ++k) {
      const S lo = arc.psi - arc.half_width + S(2) * pi * S(k);
      const S hi = arc.psi + arc.half_width + S(2) * pi * S(k);
      const S a = std::max(lo, S(0));
      const S b = std::min(hi, pi);
      if (a < b) spans.emplace_back(a, b);
    }
    if (spans.empty())
      throw DomainError("line_image_samples: no line point is projectable");
  }

  S total = S(0);
  for (const auto& sp : spans) total += sp.second - sp.first;
  std::vector<Vec2<S>> out;
  out.reserve(n);
  int assigned = 0;
  for (std::size_t si = 0; si < spans.size(); ++si) {
    const S len = spans[si].second - spans[si].first;
    int cnt = (si + 1 == spans.size())
                  ? n - assigned
                  : std::max(1, static_cast<int>(std::round(n * len / total)));
    assigned += cnt;
    const S margin = std::min(len * S(1e-3), S(1e-4));
    const S lo = spans[si].first + margin;
    const S hi = spans[si].second - margin;
    const auto dir_at = [&](S phi) -> Vec3<S> {
      return std::cos(phi) * e1 + std::sin(phi) * e2;
    };
    for (int i = 0; i < cnt; ++i) {
      const S phi = cnt == 1 ? (lo + hi) / S(2)
                             : lo + (hi - lo) * S(i) / S(cnt - 1);
      out.push_back(detail::project_swept(intr, dir_at, phi,
                                          std::min(S(1e-6), len / S(8 * n))));
    }
  }
  return out;
}

/// Projects n unit directions orthogonal to plane_normal (the horizon of
/// that plane) that lie inside the projectable set.
template <typename S>
std::vector<Vec2<S>> horizon_samples(const CameraIntrinsics<S>& intr,
                                     const Vec3<S>& plane_normal, int n) {
  if (n < 3) throw std::invalid_argument("horizon_samples: need n >= 3");
  if (!(plane_normal.norm() > S(0)))
    throw DegenerateInput("horizon_samples: zero normal");
  const Vec3<S> nh = plane_normal.normalized();
  const Vec3<S> helper =
      std::abs(nh.z()) < S(0.9) ? Vec3<S>(S(0), S(0), S(1))
                                : Vec3<S>(S(1), S(0), S(0));
  const Vec3<S> b1 = helper.cross(nh).normalized();
  const Vec3<S> b2 = nh.cross(b1);

  const S pi = std::numbers::pi_v<S>;
  const S cos_cap = std::cos(theta_max(intr.model));
  const auto arc = detail::cap_arc(b1.z(), b2.z(), cos_cap);
  if (arc.none)
    throw DomainError("horizon_samples: no horizon direction is projectable");

  std::vector<Vec2<S>> out;
  out.reserve(n);
  const auto dir_at = [&](S phi) -> Vec3<S> {
    return std::cos(phi) * b1 + std::sin(phi) * b2;
  };
  if (arc.all) {
    for (int i = 0; i < n; ++i) {
      const S phi = S(2) * pi * S(i) / S(n);
      out.push_back(detail::project_swept(intr, dir_at, phi, pi / S(4 * n)));
    }
  } else {
    const S margin = std::min(arc.half_width * S(1e-3), S(1e-4));
    const S lo = arc.psi - arc.half_width + margin;
    const S hi = arc.psi + arc.half_width - margin;
    for (int i = 0; i < n; ++i) {
      const S phi = lo + (hi - lo) * S(i) / S(n - 1);
      out.push_back(detail::project_swept(intr, dir_at, phi, margin));
    }
  }
  return out;
}

}  // namespace fisheye
