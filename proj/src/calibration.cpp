#include "fisheye/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

namespace fisheye {

void validate(const CorrespondenceSet& data) {
  if (data.items.empty()) throw ShapeError("correspondences: empty set");
  if (data.n_views <= 0)
    throw DegenerateData("correspondences: n_views must be positive");
  std::vector<int> counts(data.n_views, 0);
  for (const auto& c : data.items) {
    if (c.view_id < 0 || c.view_id >= data.n_views)
      throw DegenerateData("correspondences: view_id out of range");
    if (!c.world.allFinite() || !c.pixel.allFinite())
      throw DegenerateData("correspondences: non-finite entry");
    ++counts[c.view_id];
  }
  for (int n : counts)
    if (n < 6)
      throw DegenerateData(
          "correspondences: every view needs at least 6 points");
}

Mat3d so3_exp(const Vec3d& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Vec3d so3_log(const Mat3d& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Eigen::VectorXd reprojection_residuals(const Camerad& intr,
                                       const std::vector<ViewPose>& poses,
                                       const CorrespondenceSet& data) {
  if (data.items.empty()) throw ShapeError("reprojection_residuals: empty data");
  if (static_cast<int>(poses.size()) != data.n_views)
    throw ShapeError("reprojection_residuals: pose count != n_views");
  const double tm = theta_max(intr.model);
  Eigen::VectorXd r(2 * data.items.size());
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& c = data.items[i];
    const auto& pose = poses[c.view_id];
    const Vec3d xc = pose.rotation * c.world + pose.translation;
    const double d = std::hypot(xc.x(), xc.y());
    if (d == 0 && xc.z() == 0) {
      r(2 * i) = r(2 * i + 1) = 2e3;
      continue;
    }
    const double theta = std::atan2(d, xc.z());
    if (theta >= tm) {
      // Out-of-domain penalty, sloped so descent pulls the point back in.
      const double pen = 1e3 * (1.0 + (theta - tm));
      r(2 * i) = r(2 * i + 1) = pen;
      continue;
    }
    const Vec2d proj = project(intr, xc);
    r(2 * i) = proj.x() - c.pixel.x();
    r(2 * i + 1) = proj.y() - c.pixel.y();
  }
  return r;
}

namespace {

// Parameters the optimizer sees for each model family, excluding the shared
// (cx, cy) tail. The general perspective family is overparameterized (only
// f_p and d/f_s are observable) and is rejected; fit the ucm family instead.
int model_param_count(const ModelParamsd& m) {
  switch (model_kind(m)) {
    case ModelKind::Pinhole:
    case ModelKind::Equidistant:
    case ModelKind::Stereographic:
    case ModelKind::Orthographic:
    case ModelKind::ExtendedOrthographic:
    case ModelKind::ExtendedEquidistant:
      return 1;
    case ModelKind::PolynomialOdd:
      return static_cast<int>(std::get<PolynomialOdd<double>>(m).k.size());
    case ModelKind::PolynomialMixed:
      return 4;
    case ModelKind::OnImagePolynomial:
      return static_cast<int>(std::get<OnImagePolynomial<double>>(m).c.size());
    case ModelKind::Division:
    case ModelKind::FieldOfView:
    case ModelKind::Ucm:
      return 2;
    case ModelKind::Eucm:
    case ModelKind::DoubleSphere:
      return 3;
    case ModelKind::GeneralPerspective:
      throw std::invalid_argument(
          "fit: general_perspective is overparameterized for calibration; "
          "fit the equivalent ucm family instead");
  }
  throw std::logic_error("model_param_count: bad kind");
}

void model_to_vector(const ModelParamsd& m, double* out) {
  std::visit(
      [&](const auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, Pinhole<double>> ||
                      std::is_same_v<M, Equidistant<double>> ||
                      std::is_same_v<M, Stereographic<double>> ||
                      std::is_same_v<M, Orthographic<double>>) {
          out[0] = mm.f;
        } else if constexpr (std::is_same_v<M, ExtendedOrthographic<double>> ||
                             std::is_same_v<M, ExtendedEquidistant<double>>) {
          out[0] = mm.f;
        } else if constexpr (std::is_same_v<M, PolynomialOdd<double>>) {
          std::copy(mm.k.begin(), mm.k.end(), out);
        } else if constexpr (std::is_same_v<M, PolynomialMixed<double>>) {
          std::copy(mm.a.begin(), mm.a.end(), out);
        } else if constexpr (std::is_same_v<M, OnImagePolynomial<double>>) {
          std::copy(mm.c.begin(), mm.c.end(), out);
        } else if constexpr (std::is_same_v<M, Division<double>>) {
          out[0] = mm.a;
          out[1] = mm.f;
        } else if constexpr (std::is_same_v<M, FieldOfView<double>>) {
          out[0] = mm.omega;
          out[1] = mm.f;
        } else if constexpr (std::is_same_v<M, Ucm<double>>) {
          out[0] = mm.alpha;
          out[1] = mm.f;
        } else if constexpr (std::is_same_v<M, Eucm<double>>) {
          out[0] = mm.alpha;
          out[1] = mm.beta;
          out[2] = mm.f;
        } else if constexpr (std::is_same_v<M, DoubleSphere<double>>) {
          out[0] = mm.xi;
          out[1] = mm.alpha;
          out[2] = mm.f;
        } else {
          throw std::invalid_argument("fit: unsupported family");
        }
      },
      m);
}

ModelParamsd model_from_vector(const ModelParamsd& tmpl, const double* in) {
  ModelParamsd m = tmpl;
  std::visit(
      [&](auto& mm) {
        using M = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<M, Pinhole<double>> ||
                      std::is_same_v<M, Equidistant<double>> ||
                      std::is_same_v<M, Stereographic<double>> ||
                      std::is_same_v<M, Orthographic<double>> ||
                      std::is_same_v<M, ExtendedOrthographic<double>> ||
                      std::is_same_v<M, ExtendedEquidistant<double>>) {
          mm.f = in[0];
        } else if constexpr (std::is_same_v<M, PolynomialOdd<double>>) {
          std::copy(in, in + mm.k.size(), mm.k.begin());
        } else if constexpr (std::is_same_v<M, PolynomialMixed<double>>) {
          std::copy(in, in + mm.a.size(), mm.a.begin());
        } else if constexpr (std::is_same_v<M, OnImagePolynomial<double>>) {
          std::copy(in, in + mm.c.size(), mm.c.begin());
        } else if constexpr (std::is_same_v<M, Division<double>>) {
          mm.a = in[0];
          mm.f = in[1];
        } else if constexpr (std::is_same_v<M, FieldOfView<double>>) {
          mm.omega = in[0];
          mm.f = in[1];
        } else if constexpr (std::is_same_v<M, Ucm<double>>) {
          mm.alpha = in[0];
          mm.f = in[1];
        } else if constexpr (std::is_same_v<M, Eucm<double>>) {
          mm.alpha = in[0];
          mm.beta = in[1];
          mm.f = in[2];
        } else if constexpr (std::is_same_v<M, DoubleSphere<double>>) {
          mm.xi = in[0];
          mm.alpha = in[1];
          mm.f = in[2];
        } else {
          throw std::invalid_argument("fit: unsupported family");
        }
      },
      m);
  return m;
}

}  // namespace

Eigen::VectorXd pack_parameters(const Camerad& intr,
                                const std::vector<ViewPose>& poses) {
  const int nm = model_param_count(intr.model);
  Eigen::VectorXd p(nm + 2 + 6 * static_cast<int>(poses.size()));
  model_to_vector(intr.model, p.data());
  p(nm) = intr.cx;
  p(nm + 1) = intr.cy;
  for (std::size_t v = 0; v < poses.size(); ++v) {
    p.segment<3>(nm + 2 + 6 * v) = so3_log(poses[v].rotation);
    p.segment<3>(nm + 5 + 6 * v) = poses[v].translation;
  }
  return p;
}

void unpack_parameters(const Eigen::VectorXd& p, const Camerad& tmpl,
                       int n_views, Camerad* intr,
                       std::vector<ViewPose>* poses) {
  const int nm = model_param_count(tmpl.model);
  if (p.size() != nm + 2 + 6 * n_views)
    throw ShapeError("unpack_parameters: wrong vector length");
  *intr = Camerad(model_from_vector(tmpl.model, p.data()), p(nm), p(nm + 1),
                  tmpl.pixel_scale, tmpl.width, tmpl.height);
  poses->resize(n_views);
  for (int v = 0; v < n_views; ++v) {
    (*poses)[v].rotation = so3_exp(p.segment<3>(nm + 2 + 6 * v));
    (*poses)[v].translation = p.segment<3>(nm + 5 + 6 * v);
  }
}

namespace {

// Generic damped least squares over an arbitrary residual function. Trial
// points where the residual function throws count as rejected steps.
struct LmProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
};

struct LmSummary {
  Eigen::VectorXd p;
  Eigen::VectorXd r;
  double cost = 0;
  int iterations = 0;
  bool hit_iteration_cap = false;
};

Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& p, int m) {
  Eigen::MatrixXd J(m, p.size());
  for (int j = 0; j < p.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(p(j)));
    Eigen::VectorXd pp = p, pm = p;
    pp(j) += h;
    pm(j) -= h;
    bool ok_p = true, ok_m = true;
    Eigen::VectorXd rp, rm;
    try {
      rp = fn(pp);
    } catch (const std::exception&) {
      ok_p = false;
    }
    try {
      rm = fn(pm);
    } catch (const std::exception&) {
      ok_m = false;
    }
    if (ok_p && ok_m) {
      J.col(j) = (rp - rm) / (2 * h);
    } else if (ok_p || ok_m) {
      const Eigen::VectorXd r0 = fn(p);
      J.col(j) = ok_p ? (rp - r0) / h : (r0 - rm) / h;
    } else {
      J.col(j).setZero();
    }
  }
  return J;
}

LmSummary lm_minimize(const LmProblem& problem, const Eigen::VectorXd& p0,
                      const FitOptions& options) {
  LmSummary s;
  s.p = p0;
  s.r = problem.residuals(s.p);
  s.cost = s.r.squaredNorm();
  double lambda = options.lambda0;
  const int m = static_cast<int>(s.r.size());
  bool stalled = false;
  while (s.iterations < options.max_iterations && !stalled) {
    ++s.iterations;
    const Eigen::MatrixXd J = numeric_jacobian(problem.residuals, s.p, m);
    const Eigen::VectorXd g = J.transpose() * s.r;
    const Eigen::MatrixXd H = J.transpose() * J;
    Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-12);
    bool accepted = false;
    for (int tries = 0; tries < 50 && !accepted; ++tries) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal() += lambda * diag;
      const Eigen::VectorXd step = Hd.ldlt().solve(-g);
      if (!step.allFinite())
        throw DegenerateData("fit: normal equations rank-deficient beyond damping");
      const double rel_step = step.norm() / (s.p.norm() + 1e-30);
      double trial_cost = std::numeric_limits<double>::infinity();
      Eigen::VectorXd trial_r;
      const Eigen::VectorXd trial_p = s.p + step;
      try {
        trial_r = problem.residuals(trial_p);
        trial_cost = trial_r.squaredNorm();
      } catch (const std::exception&) {
        // invalid parameter region; treat as a rejected step
      }
      if (rel_step < options.step_tol) {
        // below the step tolerance; apply the final nudge if it still helps
        if (trial_cost <= s.cost) {
          s.p = trial_p;
          s.r = trial_r;
          s.cost = trial_cost;
          if (options.observer) options.observer(s.iterations, s.cost);
        }
        stalled = true;
        break;
      }
      if (trial_cost <= s.cost) {
        const double rel_decrease =
            (s.cost - trial_cost) / std::max(s.cost, 1e-300);
        s.p = trial_p;
        s.r = trial_r;
        s.cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (options.observer) options.observer(s.iterations, s.cost);
        if (rel_decrease < options.cost_tol) stalled = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e14) {
          stalled = true;
          break;
        }
      }
    }
  }
  s.hit_iteration_cap = !stalled && s.iterations >= options.max_iterations;
  return s;
}

// Rigid pose of one view from fixed intrinsics: rough axis-aligned seed from
// the spread ratio of target points vs. unprojected rays, then pose-only LM.
ViewPose estimate_view_pose(const Camerad& intr,
                            const std::vector<Correspondence>& points) {
  Vec3d w_mean = Vec3d::Zero();
  for (const auto& c : points) w_mean += c.world;
  w_mean /= static_cast<double>(points.size());

  double w_spread = 0, ray_spread = 0;
  int n_rays = 0;
  Vec2d tan_mean = Vec2d::Zero();
  std::vector<Vec2d> tans;
  for (const auto& c : points) {
    w_spread += (c.world - w_mean).squaredNorm();
    try {
      const Vec3d ray = unproject(intr, c.pixel);
      if (ray.z() > 0.05) {
        tans.emplace_back(ray.x() / ray.z(), ray.y() / ray.z());
        tan_mean += tans.back();
        ++n_rays;
      }
    } catch (const std::exception&) {
    }
  }
  w_spread = std::sqrt(w_spread / points.size());
  double z0 = 1.0;
  if (n_rays >= 4) {
    tan_mean /= n_rays;
    for (const auto& t : tans) ray_spread += (t - tan_mean).squaredNorm();
    ray_spread = std::sqrt(ray_spread / n_rays);
    if (ray_spread > 1e-6) z0 = w_spread / ray_spread;
  }

  CorrespondenceSet one;
  one.n_views = 1;
  one.items = points;
  for (auto& c : one.items) c.view_id = 0;

  LmProblem problem;
  problem.residuals = [&](const Eigen::VectorXd& p) {
    std::vector<ViewPose> pose(1);
    pose[0].rotation = so3_exp(p.head<3>());
    pose[0].translation = p.tail<3>();
    return reprojection_residuals(intr, pose, one);
  };
  Eigen::VectorXd p0(6);
  p0 << 0, 0, 0, -w_mean.x(), -w_mean.y(), z0;
  FitOptions opts;
  opts.max_iterations = 30;
  const LmSummary s = lm_minimize(problem, p0, opts);
  ViewPose pose;
  pose.rotation = so3_exp(s.p.head<3>());
  pose.translation = s.p.tail<3>();
  return pose;
}

std::vector<std::vector<Correspondence>> split_views(
    const CorrespondenceSet& data) {
  std::vector<std::vector<Correspondence>> views(data.n_views);
  for (const auto& c : data.items) views[c.view_id].push_back(c);
  return views;
}

// Default model shape for a family at a given focal, used by the
// no-init grid search.
ModelParamsd default_model(ModelKind family, double f) {
  switch (family) {
    case ModelKind::Pinhole: return Pinhole<double>{f};
    case ModelKind::Equidistant: return Equidistant<double>{f};
    case ModelKind::Stereographic: return Stereographic<double>{f};
    case ModelKind::Orthographic: return Orthographic<double>{f};
    case ModelKind::ExtendedOrthographic:
      return ExtendedOrthographic<double>{f, 0.0};
    case ModelKind::ExtendedEquidistant:
      return ExtendedEquidistant<double>{f, 0.0};
    case ModelKind::PolynomialOdd: return PolynomialOdd<double>{{f}, 1.8};
    case ModelKind::PolynomialMixed:
      return PolynomialMixed<double>{{f, 0, 0, 0}};
    case ModelKind::OnImagePolynomial:
      return OnImagePolynomial<double>{{f}, 1.2};
    case ModelKind::Division: return Division<double>{0.05 / (f * f), f};
    case ModelKind::FieldOfView: return FieldOfView<double>{1.0, f};
    case ModelKind::Ucm: return Ucm<double>{0.5, f};
    case ModelKind::Eucm: return Eucm<double>{0.5, 1.0, f};
    case ModelKind::DoubleSphere: return DoubleSphere<double>{0.3, 0.4, f};
    case ModelKind::GeneralPerspective:
      throw std::invalid_argument(
          "fit: general_perspective is overparameterized for calibration; "
          "fit the equivalent ucm family instead");
  }
  throw std::logic_error("default_model: bad kind");
}

Camerad initial_intrinsics(const CorrespondenceSet& data, ModelKind family) {
  double px_max_x = 0, px_max_y = 0;
  for (const auto& c : data.items) {
    px_max_x = std::max(px_max_x, std::abs(c.pixel.x()));
    px_max_y = std::max(px_max_y, std::abs(c.pixel.y()));
  }
  const int width = static_cast<int>(std::ceil(px_max_x)) + 2;
  const int height = static_cast<int>(std::ceil(px_max_y)) + 2;
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;

  double r_img = 1.0;
  for (const auto& c : data.items)
    r_img = std::max(r_img, std::hypot(c.pixel.x() - cx, c.pixel.y() - cy));
  const double f_guess = r_img;  // image radius over a ~1 rad half-FOV

  const auto views = split_views(data);
  double best_cost = std::numeric_limits<double>::infinity();
  std::optional<Camerad> best;
  for (int i = 0; i < 24; ++i) {
    const double f =
        f_guess * 0.1 * std::pow(50.0, i / 23.0);  // log grid over [0.1, 5]x
    try {
      Camerad intr(default_model(family, f), cx, cy, 1.0, width, height);
      std::vector<ViewPose> poses;
      poses.reserve(views.size());
      for (const auto& view : views)
        poses.push_back(estimate_view_pose(intr, view));
      const double cost =
          reprojection_residuals(intr, poses, data).squaredNorm();
      if (cost < best_cost) {
        best_cost = cost;
        best = intr;
      }
    } catch (const std::exception&) {
    }
  }
  if (!best)
    throw DegenerateData("fit: could not initialize any focal candidate");
  return *best;
}

}  // namespace

Eigen::MatrixXd reprojection_jacobian(const Camerad& intr,
                                      const std::vector<ViewPose>& poses,
                                      const CorrespondenceSet& data) {
  validate(data);
  const Camerad tmpl = intr;
  const int n_views = data.n_views;
  const auto fn = [&](const Eigen::VectorXd& p) {
    Camerad cam;
    std::vector<ViewPose> ps;
    unpack_parameters(p, tmpl, n_views, &cam, &ps);
    return reprojection_residuals(cam, ps, data);
  };
  return numeric_jacobian(fn, pack_parameters(intr, poses),
                          2 * static_cast<int>(data.items.size()));
}

FitResult fit(const CorrespondenceSet& data, ModelKind family,
              const std::optional<Camerad>& init, const FitOptions& options) {
  validate(data);
  if (family == ModelKind::GeneralPerspective)
    throw std::invalid_argument(
        "fit: general_perspective is overparameterized for calibration; "
        "fit the equivalent ucm family instead");
  Camerad start = init ? *init : initial_intrinsics(data, family);
  if (model_kind(start.model) != family)
    throw std::invalid_argument("fit: init model does not match the family");

  const auto views = split_views(data);
  std::vector<ViewPose> poses;
  poses.reserve(views.size());
  for (const auto& view : views)
    poses.push_back(estimate_view_pose(start, view));

  const Camerad tmpl = start;
  const int n_views = data.n_views;
  LmProblem problem;
  problem.residuals = [&](const Eigen::VectorXd& p) {
    Camerad cam;
    std::vector<ViewPose> ps;
    unpack_parameters(p, tmpl, n_views, &cam, &ps);
    return reprojection_residuals(cam, ps, data);
  };

  const LmSummary s = lm_minimize(problem, pack_parameters(start, poses),
                                  options);
  if (s.hit_iteration_cap)
    throw ConvergenceError("fit: iteration cap reached before tolerance");

  FitResult result;
  unpack_parameters(s.p, tmpl, n_views, &result.intrinsics, &result.poses);
  result.rmse = std::sqrt(s.cost / s.r.size());
  result.iterations = s.iterations;

  // Gradient check in normalized image-plane units, so the criterion does
  // not depend on the pixel scale.
  const Eigen::MatrixXd J =
      numeric_jacobian(problem.residuals, s.p, static_cast<int>(s.r.size()));
  const double scale2 = tmpl.pixel_scale * tmpl.pixel_scale;
  const double grad_norm =
      (J.transpose() * s.r).cwiseAbs().maxCoeff() / scale2;
  result.converged = grad_norm < 1e-8;
  return result;
}

CorrespondenceSet generate_synthetic(const Camerad& intr,
                                     const std::vector<ViewPose>& poses,
                                     const GridSpec& grid, double noise_sigma,
                                     std::uint64_t seed) {
  if (grid.nx < 2 || grid.ny < 2 || !(grid.spacing > 0))
    throw std::invalid_argument("generate_synthetic: bad grid spec");
  if (poses.empty())
    throw std::invalid_argument("generate_synthetic: no poses");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CorrespondenceSet data;
  data.n_views = static_cast<int>(poses.size());
  for (int v = 0; v < data.n_views; ++v) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        Correspondence c;
        c.view_id = v;
        c.world = Vec3d((i - (grid.nx - 1) / 2.0) * grid.spacing,
                        (j - (grid.ny - 1) / 2.0) * grid.spacing, 0.0);
        const Vec3d xc = poses[v].rotation * c.world + poses[v].translation;
        if (!domain_contains(intr.model, xc))
          throw DomainError("generate_synthetic: grid point leaves the "
                            "projectable set under a pose");
        c.pixel = project(intr, xc);
        if (noise_sigma > 0) {
          c.pixel.x() += noise_sigma * gauss(rng);
          c.pixel.y() += noise_sigma * gauss(rng);
        }
        data.items.push_back(c);
      }
    }
  }
  return data;
}

CorrespondenceSet read_correspondences(std::istream& in) {
  CorrespondenceSet data;
  std::string line;
  int line_no = 0;
  int max_view = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    Correspondence c;
    if (!(ls >> c.view_id >> c.world.x() >> c.world.y() >> c.world.z() >>
          c.pixel.x() >> c.pixel.y()) ||
        c.view_id < 0 || !c.world.allFinite() || !c.pixel.allFinite()) {
      throw std::runtime_error("correspondences: malformed line " +
                               std::to_string(line_no));
    }
    std::string rest;
    if (ls >> rest)
      throw std::runtime_error("correspondences: trailing tokens on line " +
                               std::to_string(line_no));
    max_view = std::max(max_view, c.view_id);
    data.items.push_back(c);
  }
  data.n_views = max_view + 1;
  return data;
}

void write_correspondences(const CorrespondenceSet& data, std::ostream& out) {
  out << "# view_id wx wy wz u v\n";
  out.precision(17);
  for (const auto& c : data.items) {
    out << c.view_id << " " << c.world.x() << " " << c.world.y() << " "
        << c.world.z() << " " << c.pixel.x() << " " << c.pixel.y() << "\n";
  }
}

}  // namespace fisheye
