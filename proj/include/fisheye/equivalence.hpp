#pragma once

#include <algorithm>
#include <cmath>

#include "fisheye/models.hpp"
#include "fisheye/types.hpp"

namespace fisheye {

/// Pinhole/equidistant focal pair whose composed on-image map reproduces the
/// field-of-view model with parameter omega.
template <typename S>
struct FovEquidistantPair {
  S f_p;
  S f_e;

  /// The composite as a model: an equidistant image undistorted to a pinhole
  /// of focal f_p.
  ExtendedEquidistant<S> composite() const {
    return ExtendedEquidistant<S>{f_e, f_p - f_e};
  }
};

template <typename S>
FovEquidistantPair<S> fov_to_equidistant(S omega) {
  if (!(omega > S(0) && omega < std::numbers::pi_v<S>))
    throw DomainError("fov_to_equidistant: omega must lie in (0, pi)");
  return {S(1) / (S(2) * std::tan(omega / S(2))), S(1) / omega};
}

/// The division model whose on-image map equals the stereographic one.
template <typename S>
Division<S> stereographic_to_division(S f) {
  if (!(f > S(0)))
    throw std::invalid_argument("stereographic_to_division: f must be > 0");
  return Division<S>{S(1) / (S(4) * f * f), f};
}

/// The unified-model parameters realizing a general perspective projection.
template <typename S>
Ucm<S> general_perspective_to_ucm(S f_p, S f_s, S d) {
  GeneralPerspective<S> gp{f_p, f_s, d};
  detail::validate_impl(gp);
  return detail::gp_to_ucm(gp);
}

enum class EquivalenceMetric {
  Projection,  ///< compare radial functions over a shared field-angle grid
  OnImage,     ///< compare undistorted radii over a shared distorted grid
};

template <typename S>
struct EquivalenceReport {
  ModelParams<S> model_a;
  ModelParams<S> model_b;
  int grid_size = 0;
  S theta_max_tested = S(0);
  S max_abs_error = S(0);
};

/// Evaluates both models on a uniform grid covering 99% of the shared domain
/// and reports the largest absolute difference. Deterministic for a fixed
/// grid size and symmetric in the two models.
template <typename S>
EquivalenceReport<S> verify_equivalence(
    const ModelParams<S>& a, const ModelParams<S>& b, int grid_size = 1000,
    EquivalenceMetric metric = EquivalenceMetric::Projection) {
  if (grid_size < 2)
    throw std::invalid_argument("verify_equivalence: grid_size must be >= 2");
  EquivalenceReport<S> report{a, b, grid_size, S(0), S(0)};
  if (metric == EquivalenceMetric::Projection) {
    const S hi = S(0.99) * std::min(theta_max(a), theta_max(b));
    report.theta_max_tested = hi;
    for (int i = 0; i < grid_size; ++i) {
      const S theta = hi * S(i) / S(grid_size - 1);
      const S err = std::abs(radial(a, theta) - radial(b, theta));
      report.max_abs_error = std::max(report.max_abs_error, err);
    }
  } else {
    const S hi = S(0.99) * std::min(onimage_radius_max(a),
                                    onimage_radius_max(b));
    if (!std::isfinite(hi))
      throw DomainError("verify_equivalence: unbounded on-image domain");
    report.theta_max_tested = std::min(radial_inv(a, hi), radial_inv(b, hi));
    for (int i = 0; i < grid_size; ++i) {
      const S r_d = hi * S(i) / S(grid_size - 1);
      const S err =
          std::abs(onimage_undistort(a, r_d) - onimage_undistort(b, r_d));
      report.max_abs_error = std::max(report.max_abs_error, err);
    }
  }
  return report;
}

}  // namespace fisheye
