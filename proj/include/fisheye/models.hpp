#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "fisheye/types.hpp"

namespace fisheye {

// ---------------------------------------------------------------------------
// Model parameter structs. All image-plane quantities are in normalized units;
// conversion to pixels happens in CameraIntrinsics. Angles are radians.
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct Pinhole {
  Scalar f;

  bool operator==(const Pinhole&) const = default;
};

template <typename Scalar = double>
struct Equidistant {
  Scalar f;

  bool operator==(const Equidistant&) const = default;
};

template <typename Scalar = double>
struct Stereographic {
  Scalar f;

  bool operator==(const Stereographic&) const = default;
};

template <typename Scalar = double>
struct Orthographic {
  Scalar f;

  bool operator==(const Orthographic&) const = default;
};

/// Orthographic image with the undistortion plane offset by `lambda` from the
/// unit sphere. Projection behaves exactly like Orthographic; the offset only
/// enters the on-image mapping. Requires f > 0 and f + lambda > 0.
template <typename Scalar = double>
struct ExtendedOrthographic {
  Scalar f;
  Scalar lambda;

  bool operator==(const ExtendedOrthographic&) const = default;
};

/// Equidistant image paired with an undistortion plane of focal f + lambda.
/// Restricted to the front half-space like any on-image model.
template <typename Scalar = double>
struct ExtendedEquidistant {
  Scalar f;
  Scalar lambda;

  bool operator==(const ExtendedEquidistant&) const = default;
};

/// Odd-power angular polynomial: r(theta) = k1*theta + k2*theta^3 + ...
/// (up to 5 coefficients). The valid angle range is caller-declared; the
/// constructor path validates strict monotonicity on it by sampling.
template <typename Scalar = double>
struct PolynomialOdd {
  std::vector<Scalar> k;
  Scalar theta_max = std::numbers::pi_v<Scalar> / Scalar(2);

  bool operator==(const PolynomialOdd&) const = default;
};

/// Mixed-power angular polynomial: r(theta) = a1*theta + ... + a4*theta^4.
template <typename Scalar = double>
struct PolynomialMixed {
  std::array<Scalar, 4> a{};
  Scalar theta_max = std::numbers::pi_v<Scalar>;

  bool operator==(const PolynomialMixed&) const = default;
};

/// On-image radial polynomial r_d = c1*r_u + c2*r_u^2 + ... mapping the
/// pinhole-equivalent (undistorted) radius to the observed radius. Both odd
/// and even powers are allowed; there is no constant term.
template <typename Scalar = double>
struct OnImagePolynomial {
  std::vector<Scalar> c;
  Scalar theta_max = std::numbers::pi_v<Scalar> / Scalar(2);

  bool operator==(const OnImagePolynomial&) const = default;
};

/// One-parameter division model composed with a pinhole of focal f.
/// The on-image pair is the canonical definition: r_u = r_d / (1 - a*r_d^2).
template <typename Scalar = double>
struct Division {
  Scalar a;
  Scalar f;

  bool operator==(const Division&) const = default;
};

/// Field-of-view model. The on-image map depends on omega only; f scales the
/// distorted image radially like the other models' focal parameter.
template <typename Scalar = double>
struct FieldOfView {
  Scalar omega;
  Scalar f;

  bool operator==(const FieldOfView&) const = default;
};

/// Unified camera model: projection to the unit sphere followed by a pinhole
/// at offset alpha/(1-alpha) along the axis. 0 <= alpha < 1.
template <typename Scalar = double>
struct Ucm {
  Scalar alpha;
  Scalar f;

  bool operator==(const Ucm&) const = default;
};

/// Enhanced unified camera model: the sphere is replaced by an ellipsoid with
/// coefficient beta (beta = 1 reduces to Ucm).
template <typename Scalar = double>
struct Eucm {
  Scalar alpha;
  Scalar beta;
  Scalar f;

  bool operator==(const Eucm&) const = default;
};

/// Double-sphere model: two unit-sphere projections separated by xi, then a
/// Ucm-style pinhole step with parameter alpha.
template <typename Scalar = double>
struct DoubleSphere {
  Scalar xi;
  Scalar alpha;
  Scalar f;

  bool operator==(const DoubleSphere&) const = default;
};

/// General vertical perspective projection: projection to a sphere of radius
/// f_s followed by a pinhole of focal f_p offset by d along the axis.
/// Equivalent to Ucm{d/f_s / (1 + d/f_s), f_p / (1 + d/f_s)}.
template <typename Scalar = double>
struct GeneralPerspective {
  Scalar f_p;
  Scalar f_s;
  Scalar d;

  bool operator==(const GeneralPerspective&) const = default;
};

template <typename Scalar = double>
using ModelParams =
    std::variant<Pinhole<Scalar>, Equidistant<Scalar>, Stereographic<Scalar>,
                 Orthographic<Scalar>, ExtendedOrthographic<Scalar>,
                 ExtendedEquidistant<Scalar>, PolynomialOdd<Scalar>,
                 PolynomialMixed<Scalar>, OnImagePolynomial<Scalar>,
                 Division<Scalar>, FieldOfView<Scalar>, Ucm<Scalar>,
                 Eucm<Scalar>, DoubleSphere<Scalar>, GeneralPerspective<Scalar>>;

using ModelParamsd = ModelParams<double>;

enum class ModelKind {
  Pinhole,
  Equidistant,
  Stereographic,
  Orthographic,
  ExtendedOrthographic,
  ExtendedEquidistant,
  PolynomialOdd,
  PolynomialMixed,
  OnImagePolynomial,
  Division,
  FieldOfView,
  Ucm,
  Eucm,
  DoubleSphere,
  GeneralPerspective,
};

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Pinhole: return "pinhole";
    case ModelKind::Equidistant: return "equidistant";
    case ModelKind::Stereographic: return "stereographic";
    case ModelKind::Orthographic: return "orthographic";
    case ModelKind::ExtendedOrthographic: return "extended_orthographic";
    case ModelKind::ExtendedEquidistant: return "extended_equidistant";
    case ModelKind::PolynomialOdd: return "polynomial_odd";
    case ModelKind::PolynomialMixed: return "polynomial_mixed";
    case ModelKind::OnImagePolynomial: return "onimage_polynomial";
    case ModelKind::Division: return "division";
    case ModelKind::FieldOfView: return "fov";
    case ModelKind::Ucm: return "ucm";
    case ModelKind::Eucm: return "eucm";
    case ModelKind::DoubleSphere: return "double_sphere";
    case ModelKind::GeneralPerspective: return "general_perspective";
  }
  return "unknown";
}

inline ModelKind kind_from_string(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(ModelKind::GeneralPerspective); ++i) {
    ModelKind k = static_cast<ModelKind>(i);
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown camera model kind: " + name);
}

template <typename S>
ModelKind model_kind(const ModelParams<S>& m) {
  return static_cast<ModelKind>(m.index());
}

namespace detail {

template <typename S>
constexpr S pi() {
  return std::numbers::pi_v<S>;
}

template <typename S>
constexpr S inf() {
  return std::numeric_limits<S>::infinity();
}

// Ucm pinhole-offset factor: for alpha <= 0.5 it bounds the denominator, for
// alpha > 0.5 it bounds the monotone range of the radial function.
template <typename S>
S ucm_w(S alpha) {
  return alpha <= S(0.5) ? alpha / (S(1) - alpha) : (S(1) - alpha) / alpha;
}

template <typename S>
Ucm<S> gp_to_ucm(const GeneralPerspective<S>& m) {
  const S xi = m.d / m.f_s;
  return Ucm<S>{xi / (S(1) + xi), m.f_p / (S(1) + xi)};
}

template <typename S>
S poly_horner(const std::vector<S>& c, S x) {
  S acc = S(0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = *it + acc * x;
  return acc * x;
}

template <typename S>
S poly_horner_deriv(const std::vector<S>& c, S x) {
  S acc = S(0);
  for (std::size_t i = c.size(); i-- > 0;) acc = S(i + 1) * c[i] + acc * x;
  return acc;
}

// ---- theta_max ----

template <typename S> S theta_max_impl(const Pinhole<S>&) { return pi<S>() / S(2); }
template <typename S> S theta_max_impl(const Equidistant<S>&) { return pi<S>(); }
template <typename S> S theta_max_impl(const Stereographic<S>&) { return pi<S>(); }
template <typename S> S theta_max_impl(const Orthographic<S>&) { return pi<S>() / S(2); }
template <typename S> S theta_max_impl(const ExtendedOrthographic<S>&) { return pi<S>() / S(2); }
template <typename S> S theta_max_impl(const ExtendedEquidistant<S>&) { return pi<S>() / S(2); }
template <typename S> S theta_max_impl(const PolynomialOdd<S>& m) { return m.theta_max; }
template <typename S> S theta_max_impl(const PolynomialMixed<S>& m) { return m.theta_max; }
template <typename S> S theta_max_impl(const OnImagePolynomial<S>& m) { return m.theta_max; }
template <typename S> S theta_max_impl(const Division<S>&) { return pi<S>() / S(2); }
template <typename S> S theta_max_impl(const FieldOfView<S>&) { return pi<S>(); }

template <typename S>
S theta_max_impl(const Ucm<S>& m) {
  return std::acos(-ucm_w(m.alpha));
}

template <typename S>
S theta_max_impl(const Eucm<S>& m) {
  const S w = ucm_w(m.alpha);
  const S c = -w * std::sqrt(m.beta) / std::sqrt(S(1) + w * w * (m.beta - S(1)));
  return std::acos(c);
}

template <typename S>
S theta_max_impl(const DoubleSphere<S>& m) {
  const S w1 = ucm_w(m.alpha);
  const S w2 =
      (w1 + m.xi) / std::sqrt(S(2) * w1 * m.xi + m.xi * m.xi + S(1));
  S tm = std::acos(-w2);
  // For xi > 1 the second sphere projection folds back at cos(theta) =
  // -1/xi; the radial function is strictly increasing only up to there.
  if (m.xi > S(1)) tm = std::min(tm, std::acos(-S(1) / m.xi));
  return tm;
}

template <typename S>
S theta_max_impl(const GeneralPerspective<S>& m) {
  return theta_max_impl(gp_to_ucm(m));
}

// ---- radial r(theta): image radius of a ray at field angle theta ----

template <typename S>
S radial_impl(const Pinhole<S>& m, S theta) {
  return m.f * std::tan(theta);
}

template <typename S>
S radial_impl(const Equidistant<S>& m, S theta) {
  return m.f * theta;
}

template <typename S>
S radial_impl(const Stereographic<S>& m, S theta) {
  return S(2) * m.f * std::tan(theta / S(2));
}

template <typename S>
S radial_impl(const Orthographic<S>& m, S theta) {
  return m.f * std::sin(theta);
}

template <typename S>
S radial_impl(const ExtendedOrthographic<S>& m, S theta) {
  return m.f * std::sin(theta);
}

template <typename S>
S radial_impl(const ExtendedEquidistant<S>& m, S theta) {
  return m.f * theta;
}

template <typename S>
S radial_impl(const PolynomialOdd<S>& m, S theta) {
  const S t2 = theta * theta;
  S acc = S(0);
  for (auto it = m.k.rbegin(); it != m.k.rend(); ++it) acc = *it + acc * t2;
  return theta * acc;
}

template <typename S>
S radial_impl(const PolynomialMixed<S>& m, S theta) {
  S acc = S(0);
  for (std::size_t i = m.a.size(); i-- > 0;) acc = m.a[i] + acc * theta;
  return acc * theta;
}

template <typename S>
S radial_impl(const OnImagePolynomial<S>& m, S theta) {
  return poly_horner(m.c, std::tan(theta));
}

template <typename S>
S radial_impl(const Division<S>& m, S theta) {
  const S ru = m.f * std::tan(theta);
  return S(2) * ru / (S(1) + std::sqrt(S(1) + S(4) * m.a * ru * ru));
}

template <typename S>
S radial_impl(const FieldOfView<S>& m, S theta) {
  const S k = std::tan(m.omega / S(2));
  return std::atan2(S(2) * m.f * std::sin(theta) * k, std::cos(theta)) /
         m.omega;
}

template <typename S>
S radial_impl(const Ucm<S>& m, S theta) {
  // Half-angle form of (1-a)cos(theta) + a; avoids cancellation near the
  // domain edge and is exact (cos^2 of the half angle) at alpha = 0.5.
  const S ch = std::cos(theta / S(2));
  const S sh = std::sin(theta / S(2));
  const S den = ch * ch - (S(1) - S(2) * m.alpha) * sh * sh;
  return m.f * std::sin(theta) / den;
}

template <typename S>
S radial_impl(const Eucm<S>& m, S theta) {
  const S s = std::sin(theta);
  const S c = std::cos(theta);
  const S rho = std::sqrt(m.beta * s * s + c * c);
  return m.f * s / (m.alpha * rho + (S(1) - m.alpha) * c);
}

// Double-sphere radial values follow the projection form; the separately
// printed radial form of this model is inconsistent with it at xi = 0.
template <typename S>
S radial_impl(const DoubleSphere<S>& m, S theta) {
  if (m.xi == S(0)) return radial_impl(Ucm<S>{m.alpha, m.f}, theta);
  const S s = std::sin(theta);
  const S c = std::cos(theta);
  const S d2 = std::sqrt(S(1) + m.xi * m.xi + S(2) * m.xi * c);
  return m.f * s / (m.alpha * d2 + (S(1) - m.alpha) * (m.xi + c));
}

template <typename S>
S radial_impl(const GeneralPerspective<S>& m, S theta) {
  return m.f_p * std::sin(theta) / (m.d / m.f_s + std::cos(theta));
}

// ---- radial derivative (used by the numeric inverses and validation) ----

template <typename S>
S radial_deriv_impl(const PolynomialOdd<S>& m, S theta) {
  const S t2 = theta * theta;
  S acc = S(0);
  for (std::size_t i = m.k.size(); i-- > 0;) acc = S(2 * i + 1) * m.k[i] + acc * t2;
  return acc;
}

template <typename S>
S radial_deriv_impl(const PolynomialMixed<S>& m, S theta) {
  S acc = S(0);
  for (std::size_t i = m.a.size(); i-- > 0;) acc = S(i + 1) * m.a[i] + acc * theta;
  return acc;
}

template <typename S>
S radial_deriv_impl(const Eucm<S>& m, S theta) {
  const S s = std::sin(theta);
  const S c = std::cos(theta);
  const S rho = std::sqrt(m.beta * s * s + c * c);
  const S den = m.alpha * rho + (S(1) - m.alpha) * c;
  return m.f * ((S(1) - m.alpha) + m.alpha * c / rho) / (den * den);
}

// ---- supremum of the image radius over [0, theta_max) ----

template <typename S> S image_radius_sup_impl(const Pinhole<S>&) { return inf<S>(); }
template <typename S> S image_radius_sup_impl(const Equidistant<S>& m) { return m.f * pi<S>(); }
template <typename S> S image_radius_sup_impl(const Stereographic<S>&) { return inf<S>(); }
template <typename S> S image_radius_sup_impl(const Orthographic<S>& m) { return m.f; }
template <typename S> S image_radius_sup_impl(const ExtendedOrthographic<S>& m) { return m.f; }
template <typename S> S image_radius_sup_impl(const ExtendedEquidistant<S>& m) { return m.f * pi<S>() / S(2); }

template <typename S>
S image_radius_sup_impl(const PolynomialOdd<S>& m) {
  return radial_impl(m, m.theta_max);
}

template <typename S>
S image_radius_sup_impl(const PolynomialMixed<S>& m) {
  return radial_impl(m, m.theta_max);
}

template <typename S>
S image_radius_sup_impl(const OnImagePolynomial<S>& m) {
  if (m.theta_max >= pi<S>() / S(2)) return inf<S>();
  return radial_impl(m, m.theta_max);
}

template <typename S>
S image_radius_sup_impl(const Division<S>& m) {
  return m.a > S(0) ? S(1) / std::sqrt(m.a) : inf<S>();
}

template <typename S>
S image_radius_sup_impl(const FieldOfView<S>& m) {
  return pi<S>() / m.omega;
}

template <typename S>
S image_radius_sup_impl(const Ucm<S>& m) {
  if (m.alpha > S(0.5)) return m.f / std::sqrt(S(2) * m.alpha - S(1));
  return inf<S>();
}

template <typename S>
S image_radius_sup_impl(const Eucm<S>& m) {
  if (m.alpha > S(0.5))
    return m.f / std::sqrt(m.beta * (S(2) * m.alpha - S(1)));
  return inf<S>();
}

template <typename S>
S image_radius_sup_impl(const DoubleSphere<S>& m) {
  const S tm = theta_max_impl(m);
  const S c = std::cos(tm);
  const S den = m.alpha * std::sqrt(S(1) + m.xi * m.xi + S(2) * m.xi * c) +
                (S(1) - m.alpha) * (m.xi + c);
  if (den < S(1e-14)) return inf<S>();
  return m.f * std::sin(tm) / den;
}

template <typename S>
S image_radius_sup_impl(const GeneralPerspective<S>& m) {
  return image_radius_sup_impl(gp_to_ucm(m));
}

// ---- monotone scalar inversion: Newton with a bisection safeguard ----

template <typename S, typename Fn, typename Deriv>
S invert_increasing(Fn&& fn, Deriv&& deriv, S target, S hi, S seed,
                    const char* what) {
  if (target == S(0)) return S(0);
  S lo = S(0);
  S hi_b = hi;
  S x = seed;
  if (!(x > lo && x < hi_b)) x = (lo + hi_b) / S(2);
  for (int iter = 0; iter < 60; ++iter) {
    const S fx = fn(x) - target;
    if (fx == S(0)) return x;
    if (fx > S(0))
      hi_b = x;
    else
      lo = x;
    const S d = deriv(x);
    S xn = x - fx / d;
    if (!std::isfinite(xn) || !(xn > lo && xn < hi_b)) xn = (lo + hi_b) / S(2);
    const S dx = std::abs(xn - x);
    x = xn;
    if (dx < S(1e-12)) return x;
  }
  throw ConvergenceError(std::string("radial inversion did not converge: ") +
                         what);
}

// ---- radial inverse theta(r) ----

template <typename S>
S radial_inv_impl(const Pinhole<S>& m, S r) {
  return std::atan(r / m.f);
}

template <typename S>
S radial_inv_impl(const Equidistant<S>& m, S r) {
  return r / m.f;
}

template <typename S>
S radial_inv_impl(const Stereographic<S>& m, S r) {
  return S(2) * std::atan(r / (S(2) * m.f));
}

template <typename S>
S radial_inv_impl(const Orthographic<S>& m, S r) {
  return std::asin(r / m.f);
}

template <typename S>
S radial_inv_impl(const ExtendedOrthographic<S>& m, S r) {
  return std::asin(r / m.f);
}

template <typename S>
S radial_inv_impl(const ExtendedEquidistant<S>& m, S r) {
  return r / m.f;
}

template <typename S>
S radial_inv_impl(const PolynomialOdd<S>& m, S r) {
  const S hi = m.theta_max;
  return invert_increasing(
      [&](S t) { return radial_impl(m, t); },
      [&](S t) { return radial_deriv_impl(m, t); }, r, hi, r / m.k[0],
      "polynomial_odd");
}

template <typename S>
S radial_inv_impl(const PolynomialMixed<S>& m, S r) {
  const S hi = m.theta_max;
  return invert_increasing(
      [&](S t) { return radial_impl(m, t); },
      [&](S t) { return radial_deriv_impl(m, t); }, r, hi, r / m.a[0],
      "polynomial_mixed");
}

template <typename S>
S radial_inv_impl(const OnImagePolynomial<S>& m, S r) {
  // Invert the polynomial in the undistorted radius, then lift the angle.
  const S th_hi = std::min(m.theta_max, pi<S>() / S(2) * (S(1) - S(1e-12)));
  const S ru_hi = std::tan(th_hi);
  const S ru = invert_increasing([&](S x) { return poly_horner(m.c, x); },
                                 [&](S x) { return poly_horner_deriv(m.c, x); },
                                 r, ru_hi, r / m.c[0], "onimage_polynomial");
  return std::atan(ru);
}

template <typename S>
S radial_inv_impl(const Division<S>& m, S r) {
  return std::atan2(r, m.f * (S(1) - m.a * r * r));
}

template <typename S>
S radial_inv_impl(const FieldOfView<S>& m, S r) {
  const S phi = r * m.omega;
  return std::atan2(std::sin(phi),
                    S(2) * m.f * std::tan(m.omega / S(2)) * std::cos(phi));
}

template <typename S>
S radial_inv_impl(const Ucm<S>& m, S r) {
  const S a = m.alpha;
  const S K = (a * m.f +
               (S(1) - a) * std::sqrt((S(1) - S(2) * a) * r * r + m.f * m.f)) /
              ((S(1) - a) * (S(1) - a) * r * r + m.f * m.f);
  const S z = K * m.f / (S(1) - a) - a / (S(1) - a);
  return std::atan2(K * r, z);
}

template <typename S>
S radial_inv_impl(const Eucm<S>& m, S r) {
  const S hi = theta_max_impl(m) * (S(1) - S(1e-15));
  return invert_increasing([&](S t) { return radial_impl(m, t); },
                           [&](S t) { return radial_deriv_impl(m, t); }, r, hi,
                           r / m.f, "eucm");
}

template <typename S>
S radial_inv_impl(const DoubleSphere<S>& m, S r) {
  const S mr = r / m.f;
  const S mr2 = mr * mr;
  const S a = m.alpha;
  const S mz = (S(1) - a * a * mr2) /
               (a * std::sqrt(S(1) - (S(2) * a - S(1)) * mr2) + S(1) - a);
  const S coef =
      (mz * m.xi + std::sqrt(mz * mz + (S(1) - m.xi * m.xi) * mr2)) /
      (mz * mz + mr2);
  return std::atan2(coef * mr, coef * mz - m.xi);
}

template <typename S>
S radial_inv_impl(const GeneralPerspective<S>& m, S r) {
  return radial_inv_impl(gp_to_ucm(m), r);
}

// ---- projection to the normalized image plane ----

// Shared radial-form projection: preserves the azimuth of (X, Y) exactly.
template <typename S, typename Model>
Vec2<S> project_radial(const Model& m, const Vec3<S>& X) {
  const S d = std::hypot(X.x(), X.y());
  const S theta = std::atan2(d, X.z());
  const S r = radial_impl(m, theta);
  if (d == S(0)) return Vec2<S>(r, S(0));
  return (r / d) * X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const Pinhole<S>& m, const Vec3<S>& X) {
  return (m.f / X.z()) * X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const Equidistant<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const Stereographic<S>& m, const Vec3<S>& X) {
  return (S(2) * m.f / (X.z() + X.norm())) * X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const Orthographic<S>& m, const Vec3<S>& X) {
  return (m.f / X.norm()) * X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const ExtendedOrthographic<S>& m, const Vec3<S>& X) {
  return (m.f / X.norm()) * X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const ExtendedEquidistant<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const PolynomialOdd<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const PolynomialMixed<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const OnImagePolynomial<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const Division<S>& m, const Vec3<S>& X) {
  const Vec2<S> p = (m.f / X.z()) * X.template head<2>();
  const S ru2 = p.squaredNorm();
  return p * (S(2) / (S(1) + std::sqrt(S(1) + S(4) * m.a * ru2)));
}

template <typename S>
Vec2<S> project_impl(const FieldOfView<S>& m, const Vec3<S>& X) {
  return project_radial(m, X);
}

template <typename S>
Vec2<S> project_impl(const Ucm<S>& m, const Vec3<S>& X) {
  return (m.f / (m.alpha * X.norm() + (S(1) - m.alpha) * X.z())) *
         X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const Eucm<S>& m, const Vec3<S>& X) {
  const S rho = std::sqrt(m.beta * (X.x() * X.x() + X.y() * X.y()) +
                          X.z() * X.z());
  return (m.f / (m.alpha * rho + (S(1) - m.alpha) * X.z())) *
         X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const DoubleSphere<S>& m, const Vec3<S>& X) {
  const S d1 = X.norm();
  const S zs = m.xi * d1 + X.z();
  const S d2 = std::sqrt(X.x() * X.x() + X.y() * X.y() + zs * zs);
  return (m.f / (m.alpha * d2 + (S(1) - m.alpha) * zs)) *
         X.template head<2>();
}

template <typename S>
Vec2<S> project_impl(const GeneralPerspective<S>& m, const Vec3<S>& X) {
  return (m.f_p / (X.z() + m.d / m.f_s * X.norm())) * X.template head<2>();
}

// ---- unprojection to a unit ray ----

// Shared lift via the radial inverse; the image azimuth carries over exactly.
template <typename S, typename Model>
Vec3<S> unproject_radial(const Model& m, const Vec2<S>& u) {
  const S r = u.norm();
  if (r == S(0)) return Vec3<S>(S(0), S(0), S(1));
  const S theta = radial_inv_impl(m, r);
  const S s = std::sin(theta);
  return Vec3<S>(s * u.x() / r, s * u.y() / r, std::cos(theta));
}

template <typename S>
Vec3<S> unproject_impl(const Pinhole<S>& m, const Vec2<S>& u) {
  return Vec3<S>(u.x(), u.y(), m.f).normalized();
}

template <typename S>
Vec3<S> unproject_impl(const Equidistant<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const Stereographic<S>& m, const Vec2<S>& u) {
  const S r2 = u.squaredNorm();
  const S den = S(4) * m.f * m.f + r2;
  return Vec3<S>(S(4) * m.f * u.x() / den, S(4) * m.f * u.y() / den,
                 (S(4) * m.f * m.f - r2) / den)
      .normalized();
}

template <typename S>
Vec3<S> unproject_impl(const Orthographic<S>& m, const Vec2<S>& u) {
  const S z = std::sqrt(m.f * m.f - u.squaredNorm());
  return Vec3<S>(u.x() / m.f, u.y() / m.f, z / m.f).normalized();
}

template <typename S>
Vec3<S> unproject_impl(const ExtendedOrthographic<S>& m, const Vec2<S>& u) {
  const S z = std::sqrt(m.f * m.f - u.squaredNorm());
  return Vec3<S>(u.x() / m.f, u.y() / m.f, z / m.f).normalized();
}

template <typename S>
Vec3<S> unproject_impl(const ExtendedEquidistant<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const PolynomialOdd<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const PolynomialMixed<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const OnImagePolynomial<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const Division<S>& m, const Vec2<S>& u) {
  const S den = S(1) - m.a * u.squaredNorm();
  return Vec3<S>(u.x() / den, u.y() / den, m.f).normalized();
}

template <typename S>
Vec3<S> unproject_impl(const FieldOfView<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const Ucm<S>& m, const Vec2<S>& u) {
  const S a = m.alpha;
  const S r2 = u.squaredNorm();
  const S K =
      (a * m.f + (S(1) - a) * std::sqrt((S(1) - S(2) * a) * r2 + m.f * m.f)) /
      ((S(1) - a) * (S(1) - a) * r2 + m.f * m.f);
  return Vec3<S>(K * u.x(), K * u.y(),
                 K * m.f / (S(1) - a) - a / (S(1) - a))
      .normalized();
}

template <typename S>
Vec3<S> unproject_impl(const Eucm<S>& m, const Vec2<S>& u) {
  return unproject_radial(m, u);
}

template <typename S>
Vec3<S> unproject_impl(const DoubleSphere<S>& m, const Vec2<S>& u) {
  const S a = m.alpha;
  const Vec2<S> mu = u / m.f;
  const S mr2 = mu.squaredNorm();
  const S mz = (S(1) - a * a * mr2) /
               (a * std::sqrt(S(1) - (S(2) * a - S(1)) * mr2) + S(1) - a);
  const S coef =
      (mz * m.xi + std::sqrt(mz * mz + (S(1) - m.xi * m.xi) * mr2)) /
      (mz * mz + mr2);
  return Vec3<S>(coef * mu.x(), coef * mu.y(), coef * mz - m.xi).normalized();
}

template <typename S>
Vec3<S> unproject_impl(const GeneralPerspective<S>& m, const Vec2<S>& u) {
  return unproject_impl(gp_to_ucm(m), u);
}

// ---- pinhole-equivalent focal used by the on-image mappings ----

template <typename S, typename Model>
S undistorted_focal(const Model& m) {
  return m.f;
}

template <typename S>
S undistorted_focal(const ExtendedOrthographic<S>& m) {
  return m.f + m.lambda;
}

template <typename S>
S undistorted_focal(const ExtendedEquidistant<S>& m) {
  return m.f + m.lambda;
}

template <typename S>
S undistorted_focal(const PolynomialOdd<S>&) {
  return S(1);
}

template <typename S>
S undistorted_focal(const PolynomialMixed<S>&) {
  return S(1);
}

template <typename S>
S undistorted_focal(const OnImagePolynomial<S>&) {
  return S(1);
}

template <typename S>
S undistorted_focal(const GeneralPerspective<S>& m) {
  return gp_to_ucm(m).f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parameter validation
// ---------------------------------------------------------------------------

namespace detail {

template <typename S>
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename S, typename Model>
void check_monotone_radial(const Model& m, S theta_hi, const char* what) {
  constexpr int kSamples = 1000;
  S prev = S(0);
  for (int i = 1; i <= kSamples; ++i) {
    const S theta = theta_hi * S(i) / S(kSamples);
    const S r = radial_impl(m, theta);
    if (!(std::isfinite(r) && r > prev))
      throw std::invalid_argument(std::string(what) +
                                  ": radial function not strictly increasing "
                                  "on the declared angle range");
    prev = r;
  }
}

template <typename S> void validate_impl(const Pinhole<S>& m) { require<S>(m.f > S(0), "pinhole: f must be > 0"); }
template <typename S> void validate_impl(const Equidistant<S>& m) { require<S>(m.f > S(0), "equidistant: f must be > 0"); }
template <typename S> void validate_impl(const Stereographic<S>& m) { require<S>(m.f > S(0), "stereographic: f must be > 0"); }
template <typename S> void validate_impl(const Orthographic<S>& m) { require<S>(m.f > S(0), "orthographic: f must be > 0"); }

template <typename S>
void validate_impl(const ExtendedOrthographic<S>& m) {
  require<S>(m.f > S(0), "extended_orthographic: f must be > 0");
  require<S>(m.f + m.lambda > S(0),
             "extended_orthographic: f + lambda must be > 0");
}

template <typename S>
void validate_impl(const ExtendedEquidistant<S>& m) {
  require<S>(m.f > S(0), "extended_equidistant: f must be > 0");
  require<S>(m.f + m.lambda > S(0),
             "extended_equidistant: f + lambda must be > 0");
}

template <typename S>
void validate_impl(const PolynomialOdd<S>& m) {
  require<S>(!m.k.empty() && m.k.size() <= 5,
             "polynomial_odd: between 1 and 5 coefficients");
  require<S>(m.theta_max > S(0) && m.theta_max <= pi<S>(),
             "polynomial_odd: theta_max must lie in (0, pi]");
  check_monotone_radial<S>(m, m.theta_max, "polynomial_odd");
}

template <typename S>
void validate_impl(const PolynomialMixed<S>& m) {
  require<S>(m.theta_max > S(0) && m.theta_max <= pi<S>(),
             "polynomial_mixed: theta_max must lie in (0, pi]");
  check_monotone_radial<S>(m, m.theta_max, "polynomial_mixed");
}

template <typename S>
void validate_impl(const OnImagePolynomial<S>& m) {
  require<S>(!m.c.empty(), "onimage_polynomial: needs coefficients");
  require<S>(m.theta_max > S(0) && m.theta_max <= pi<S>() / S(2),
             "onimage_polynomial: theta_max must lie in (0, pi/2]");
  const S hi = std::min(m.theta_max, pi<S>() / S(2) * (S(1) - S(1e-9)));
  check_monotone_radial<S>(m, hi, "onimage_polynomial");
}

template <typename S>
void validate_impl(const Division<S>& m) {
  require<S>(m.a >= S(0), "division: a must be >= 0");
  require<S>(m.f > S(0), "division: f must be > 0");
}

template <typename S>
void validate_impl(const FieldOfView<S>& m) {
  require<S>(m.omega > S(0) && m.omega < pi<S>(),
             "fov: omega must lie in (0, pi)");
  require<S>(m.f > S(0), "fov: f must be > 0");
}

template <typename S>
void validate_impl(const Ucm<S>& m) {
  require<S>(m.alpha >= S(0) && m.alpha < S(1),
             "ucm: alpha must lie in [0, 1)");
  require<S>(m.f > S(0), "ucm: f must be > 0");
}

template <typename S>
void validate_impl(const Eucm<S>& m) {
  require<S>(m.alpha >= S(0) && m.alpha < S(1),
             "eucm: alpha must lie in [0, 1)");
  require<S>(m.beta > S(0), "eucm: beta must be > 0");
  require<S>(m.f > S(0), "eucm: f must be > 0");
}

template <typename S>
void validate_impl(const DoubleSphere<S>& m) {
  require<S>(m.xi >= S(0), "double_sphere: xi must be >= 0");
  require<S>(m.alpha >= S(0) && m.alpha < S(1),
             "double_sphere: alpha must lie in [0, 1)");
  require<S>(m.f > S(0), "double_sphere: f must be > 0");
}

template <typename S>
void validate_impl(const GeneralPerspective<S>& m) {
  require<S>(m.f_p > S(0), "general_perspective: f_p must be > 0");
  require<S>(m.f_s > S(0), "general_perspective: f_s must be > 0");
  require<S>(m.d >= S(0), "general_perspective: d must be >= 0");
}

template <typename S, typename Model>
bool params_finite(const Model&) {
  return true;
}

}  // namespace detail

/// Checks the parameter invariants of a model; throws std::invalid_argument.
template <typename S>
void validate(const ModelParams<S>& m) {
  std::visit([](const auto& mm) { detail::validate_impl(mm); }, m);
}

// ---------------------------------------------------------------------------
// Domain queries
// ---------------------------------------------------------------------------

/// Largest field angle the model can image; valid rays satisfy
/// theta(X) < theta_max strictly.
template <typename S>
S theta_max(const ModelParams<S>& m) {
  return std::visit([](const auto& mm) { return detail::theta_max_impl(mm); },
                    m);
}

/// Supremum of attainable image radii (normalized units); may be infinite.
/// Valid image points satisfy |u| < image_radius_max strictly.
template <typename S>
S image_radius_max(const ModelParams<S>& m) {
  return std::visit(
      [](const auto& mm) { return detail::image_radius_sup_impl(mm); }, m);
}

/// The model's valid field-angle range and image disc in one record.
template <typename Scalar = double>
struct DomainSpec {
  Scalar theta_max;
  Scalar image_radius_max;  // may be infinite
};

template <typename S>
DomainSpec<S> domain_spec(const ModelParams<S>& m) {
  return {theta_max(m), image_radius_max(m)};
}

template <typename S>
bool domain_contains(const ModelParams<S>& m, const Vec3<S>& X) {
  if (!X.allFinite()) return false;
  const S d = std::hypot(X.x(), X.y());
  if (d == S(0) && X.z() == S(0)) return false;
  const S theta = std::atan2(d, X.z());
  return theta < theta_max(m);
}

template <typename S>
bool image_domain_contains(const ModelParams<S>& m, const Vec2<S>& u) {
  if (!u.allFinite()) return false;
  return u.norm() < image_radius_max(m);
}

// ---------------------------------------------------------------------------
// Radial forms
// ---------------------------------------------------------------------------

/// Image radius (normalized units) of a ray at field angle theta.
template <typename S>
S radial(const ModelParams<S>& m, S theta) {
  if (!(theta >= S(0)) || theta >= theta_max(m))
    throw DomainError("radial: field angle outside [0, theta_max)");
  return std::visit(
      [&](const auto& mm) { return detail::radial_impl(mm, theta); }, m);
}

/// Field angle imaged at radius r; exact inverse of radial().
template <typename S>
S radial_inv(const ModelParams<S>& m, S r) {
  if (!(r >= S(0)) || r >= image_radius_max(m))
    throw DomainError("radial_inv: radius outside the image domain");
  return std::visit(
      [&](const auto& mm) { return detail::radial_inv_impl(mm, r); }, m);
}

// ---------------------------------------------------------------------------
// On-image mappings (distorted radius <-> pinhole-equivalent radius)
// ---------------------------------------------------------------------------

/// Largest distorted radius the on-image mapping accepts (may be infinite).
template <typename S>
S onimage_radius_max(const ModelParams<S>& m) {
  const S half_pi = std::numbers::pi_v<S> / S(2);
  if (theta_max(m) > half_pi) return radial(m, half_pi);
  return image_radius_max(m);
}

/// Maps a distorted image radius to the pinhole-equivalent radius.
template <typename S>
S onimage_undistort(const ModelParams<S>& m, S r_d) {
  if (!(r_d >= S(0)) || r_d >= onimage_radius_max(m))
    throw DomainError("onimage_undistort: radius at or beyond the singular "
                      "radius of the mapping");
  return std::visit(
      [&](const auto& mm) -> S {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, Pinhole<S>>) {
          return r_d;
        } else if constexpr (std::is_same_v<M, Equidistant<S>>) {
          return mm.f * std::tan(r_d / mm.f);
        } else if constexpr (std::is_same_v<M, Stereographic<S>>) {
          return r_d / (S(1) - r_d * r_d / (S(4) * mm.f * mm.f));
        } else if constexpr (std::is_same_v<M, ExtendedOrthographic<S>>) {
          return (mm.lambda + mm.f) * r_d /
                 std::sqrt(mm.f * mm.f - r_d * r_d);
        } else if constexpr (std::is_same_v<M, Orthographic<S>>) {
          return mm.f * r_d / std::sqrt(mm.f * mm.f - r_d * r_d);
        } else if constexpr (std::is_same_v<M, ExtendedEquidistant<S>>) {
          return (mm.f + mm.lambda) * std::tan(r_d / mm.f);
        } else if constexpr (std::is_same_v<M, Division<S>>) {
          return r_d / (S(1) - mm.a * r_d * r_d);
        } else if constexpr (std::is_same_v<M, FieldOfView<S>>) {
          return std::tan(r_d * mm.omega) /
                 (S(2) * std::tan(mm.omega / S(2)));
        } else {
          const S theta = detail::radial_inv_impl(mm, r_d);
          return detail::undistorted_focal<S>(mm) * std::tan(theta);
        }
      },
      m);
}

/// Maps a pinhole-equivalent radius to the distorted image radius;
/// inverse of onimage_undistort on the shared domain.
template <typename S>
S onimage_distort(const ModelParams<S>& m, S r_u) {
  if (!(r_u >= S(0)) || !std::isfinite(r_u))
    throw DomainError("onimage_distort: radius must be finite and >= 0");
  return std::visit(
      [&](const auto& mm) -> S {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, Pinhole<S>>) {
          return r_u;
        } else if constexpr (std::is_same_v<M, Equidistant<S>>) {
          return mm.f * std::atan(r_u / mm.f);
        } else if constexpr (std::is_same_v<M, Stereographic<S>>) {
          return S(2) * r_u /
                 (S(1) + std::sqrt(S(1) + r_u * r_u / (mm.f * mm.f)));
        } else if constexpr (std::is_same_v<M, ExtendedOrthographic<S>>) {
          const S fu = mm.lambda + mm.f;
          return mm.f * r_u / std::sqrt(fu * fu + r_u * r_u);
        } else if constexpr (std::is_same_v<M, Orthographic<S>>) {
          return mm.f * r_u / std::sqrt(mm.f * mm.f + r_u * r_u);
        } else if constexpr (std::is_same_v<M, ExtendedEquidistant<S>>) {
          return mm.f * std::atan(r_u / (mm.f + mm.lambda));
        } else if constexpr (std::is_same_v<M, Division<S>>) {
          return S(2) * r_u /
                 (S(1) + std::sqrt(S(1) + S(4) * mm.a * r_u * r_u));
        } else if constexpr (std::is_same_v<M, FieldOfView<S>>) {
          return std::atan(S(2) * r_u * std::tan(mm.omega / S(2))) / mm.omega;
        } else if constexpr (std::is_same_v<M, OnImagePolynomial<S>>) {
          return detail::poly_horner(mm.c, r_u);
        } else {
          const S theta = std::atan(r_u / detail::undistorted_focal<S>(mm));
          if (theta >= detail::theta_max_impl(mm))
            throw DomainError("onimage_distort: radius maps beyond theta_max");
          return detail::radial_impl(mm, theta);
        }
      },
      m);
}

// ---------------------------------------------------------------------------
// Projection / unprojection on the normalized image plane
// ---------------------------------------------------------------------------

/// Projects a camera-frame point to the normalized image plane.
/// The azimuth of (X, Y) is preserved exactly.
template <typename S>
Vec2<S> project(const ModelParams<S>& m, const Vec3<S>& X) {
  if (X.allFinite() && X.x() == S(0) && X.y() == S(0) && X.z() == S(0))
    throw DegenerateInput("project: point at the projection center");
  if (!domain_contains(m, X))
    throw DomainError("project: point outside the projectable set");
  return std::visit(
      [&](const auto& mm) { return detail::project_impl(mm, X); }, m);
}

/// Lifts a normalized image point to the unit viewing sphere.
template <typename S>
Vec3<S> unproject(const ModelParams<S>& m, const Vec2<S>& u) {
  if (!image_domain_contains(m, u))
    throw DomainError("unproject: image point outside the attainable set");
  return std::visit(
      [&](const auto& mm) { return detail::unproject_impl(mm, u); }, m);
}

/// True when radial_inv (and hence unproject) is evaluated in closed form;
/// false for the models that invert the radial function numerically.
template <typename S>
bool has_analytic_inverse(const ModelParams<S>& m) {
  switch (model_kind(m)) {
    case ModelKind::PolynomialOdd:
    case ModelKind::PolynomialMixed:
    case ModelKind::OnImagePolynomial:
    case ModelKind::Eucm:
      return false;
    default:
      return true;
  }
}

}  // namespace fisheye
