#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fisheye/calibration.hpp"
#include "fisheye/epipolar.hpp"

using namespace fisheye;

namespace {

constexpr double kPi = std::numbers::pi;

// Algebraic least-squares circle fit; returns (center, radius).
struct CircleFit {
  Vec2d center;
  double radius;
};

CircleFit fit_circle(const std::vector<Vec2d>& pts) {
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A(i, 0) = pts[i].x();
    A(i, 1) = pts[i].y();
    A(i, 2) = 1.0;
    b(i) = pts[i].squaredNorm();
  }
  const Eigen::Vector3d sol =
      A.colPivHouseholderQr().solve(b);
  const Vec2d c(sol(0) / 2, sol(1) / 2);
  return {c, std::sqrt(sol(2) + c.squaredNorm())};
}

double circle_residual_rel(const std::vector<Vec2d>& pts) {
  const CircleFit fit = fit_circle(pts);
  double worst = 0;
  for (const auto& p : pts)
    worst = std::max(worst, std::abs((p - fit.center).norm() - fit.radius));
  return worst / fit.radius;
}

// General-conic least squares (smallest singular vector) with a Sampson-style
// geometric residual.
double conic_residual(const std::vector<Vec2d>& pts) {
  Eigen::MatrixXd D(pts.size(), 6);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = pts[i].x(), y = pts[i].y();
    D.row(i) << x * x, x * y, y * y, x, y, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinV);
  const Eigen::VectorXd c = svd.matrixV().col(5);
  double worst = 0;
  for (const auto& p : pts) {
    const double x = p.x(), y = p.y();
    const double v = c(0) * x * x + c(1) * x * y + c(2) * y * y + c(3) * x +
                     c(4) * y + c(5);
    const double gx = 2 * c(0) * x + c(1) * y + c(3);
    const double gy = c(1) * x + 2 * c(2) * y + c(4);
    worst = std::max(worst, std::abs(v) / std::hypot(gx, gy));
  }
  return worst;
}

double spearman_rho(const std::vector<double>& xs,
                    const std::vector<double>& ys) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = double(r);
    return rank;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double n = double(xs.size());
  double d2 = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

RelativePosed test_pose() {
  return RelativePosed(so3_exp(Vec3d(0.12, -0.21, 0.07)),
                       Vec3d(0.7, 0.2, -0.4));
}

}  // namespace

TEST_CASE("essential matrix from pose") {
  const RelativePosed trivial(Mat3d::Identity(), Vec3d(1, 0, 0));
  const EssentialMatrixd E0 = essential_from_pose(trivial);
  CHECK(epipolar_residual(E0, Vec3d(0, 0, 1), Vec3d(0, 0, 1)) == 0.0);

  const RelativePosed pose = test_pose();
  const EssentialMatrixd E = essential_from_pose(pose);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec3d x(2 * unit(rng), 2 * unit(rng), 3.0 + 1.5 * unit(rng));
    const Vec3d s1 = x.normalized();
    const Vec3d s2 = (pose.rotation * x + pose.translation).normalized();
    CHECK(epipolar_residual(E, s1, s2) <= 1e-12);
    CHECK(std::abs(s2.dot(E.m * s1)) <= 1e-12);
  }

  // constraint sensitivity: a ray nudged off the plane has nonzero residual
  const Vec3d x(0.4, -0.3, 2.5);
  const Vec3d s1 = x.normalized();
  Vec3d s2 = (pose.rotation * x + pose.translation).normalized();
  const Vec3d n = (E.m * s1).normalized();
  const Vec3d toward_n = so3_exp(1e-3 * n.cross(s2).normalized()) * s2;
  CHECK(epipolar_residual(E, s1, toward_n) ==
        doctest::Approx(1e-3).epsilon(0.02));
  const Vec3d in_plane = so3_exp(0.01 * n) * s2;
  CHECK(epipolar_residual(E, s1, in_plane) <= 1e-12);

  // the epipole lies on every plane of the pencil
  const Vec3d epipole = (pose.rotation.transpose() * pose.translation)
                            .normalized();
  CHECK(epipolar_residual(E, epipole, s2) == 0.0);

  CHECK_THROWS_AS(EssentialMatrixd(Mat3d::Identity()), std::invalid_argument);
}

TEST_CASE("midpoint triangulation") {
  const RelativePosed pose = test_pose();
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3d x(1.5 * unit(rng), 1.5 * unit(rng), 2.0 + unit(rng));
    const Vec3d s1 = x.normalized();
    const Vec3d s2 = (pose.rotation * x + pose.translation).normalized();
    const Vec3d rec = triangulate_midpoint(s1, s2, pose);
    CHECK((rec - x).norm() <= 1e-9 * x.norm());
  }

  // a point on the baseline is degenerate
  const Vec3d c2 = -(pose.rotation.transpose() * pose.translation);
  const Vec3d on_baseline = 0.4 * c2;
  const Vec3d s1 = on_baseline.normalized();
  const Vec3d s2 =
      (pose.rotation * on_baseline + pose.translation).normalized();
  CHECK_THROWS_AS((void)triangulate_midpoint(s1, s2, pose), DegenerateInput);

  // symmetric configuration: equal distance to both centers
  const RelativePosed shift(Mat3d::Identity(), Vec3d(1, 0, 0));
  const Vec3d sym(-0.5, 0.3, 2.0);
  const Vec3d r1 = sym.normalized();
  const Vec3d r2 = (sym + Vec3d(1, 0, 0)).normalized();
  const Vec3d rec = triangulate_midpoint(r1, r2, shift);
  const Vec3d center2(-1, 0, 0);
  CHECK(std::abs(rec.norm() - (rec - center2).norm()) <= 1e-9);

  // under symmetric ray noise the midpoint stays within the segment of the
  // two closest-approach points (it is their average by construction)
  std::mt19937 rng2(5);
  std::normal_distribution<double> gauss(0.0, 1e-3);
  for (int i = 0; i < 50; ++i) {
    const Vec3d x(1.0 * unit(rng2), 1.0 * unit(rng2), 2.5);
    const Vec3d s1n =
        so3_exp(Vec3d(gauss(rng2), gauss(rng2), gauss(rng2))) * x.normalized();
    const Vec3d s2n = so3_exp(Vec3d(gauss(rng2), gauss(rng2), gauss(rng2))) *
                      (pose.rotation * x + pose.translation).normalized();
    const Vec3d mid = triangulate_midpoint(s1n, s2n, pose);
    // independent closest-approach computation
    const Vec3d d1 = s1n.normalized();
    const Vec3d d2 = (pose.rotation.transpose() * s2n).normalized();
    const Vec3d o2 = -(pose.rotation.transpose() * pose.translation);
    const double c = d1.dot(d2);
    const double a = (o2.dot(d1) - c * o2.dot(d2)) / (1 - c * c);
    const double b = (c * o2.dot(d1) - o2.dot(d2)) / (1 - c * c);
    const Vec3d p1 = a * d1;
    const Vec3d p2 = o2 + b * d2;
    CHECK((mid - 0.5 * (p1 + p2)).norm() <= 1e-12 * std::max(1.0, mid.norm()));
  }
}

TEST_CASE("epipolar residual grows monotonically with noise") {
  const RelativePosed pose = test_pose();
  const EssentialMatrixd E = essential_from_pose(pose);
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> levels = {1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  std::vector<double> means;
  for (double sigma : levels) {
    double sum = 0;
    for (int i = 0; i < 300; ++i) {
      const Vec3d x(2 * unit(rng), 2 * unit(rng), 3.0 + unit(rng));
      Vec3d s2 = (pose.rotation * x + pose.translation).normalized();
      s2 = so3_exp(sigma * Vec3d(gauss(rng), gauss(rng), gauss(rng))) * s2;
      sum += epipolar_residual(E, x.normalized(), s2);
    }
    means.push_back(sum / 300);
  }
  CHECK(spearman_rho(levels, means) > 0.9);
}

TEST_CASE("vanishing points") {
  const Camerad equi = Camerad::normalized(Equidistant<double>{1.0});
  const auto vp = vanishing_points(equi, Vec3d(1, 0, 0));
  REQUIRE(vp.forward.has_value());
  REQUIRE(vp.backward.has_value());
  CHECK((*vp.forward - Vec2d(kPi / 2, 0)).norm() <= 1e-12);
  CHECK((*vp.backward - Vec2d(-kPi / 2, 0)).norm() <= 1e-12);

  const Camerad pin = Camerad::normalized(Pinhole<double>{1.0});
  CHECK_THROWS_AS((void)vanishing_points(pin, Vec3d(1, 0, 0)), DomainError);

  // antipodality whenever both exist
  for (const ModelParamsd m :
       {ModelParamsd(Equidistant<double>{1.0}),
        ModelParamsd(Stereographic<double>{0.8}),
        ModelParamsd(Ucm<double>{0.4, 1.0})}) {
    const Camerad cam = Camerad::normalized(m);
    const Vec3d dir = Vec3d(0.9, 0.3, 0.6).normalized();
    const auto v = vanishing_points(cam, dir);
    if (v.forward && v.backward) {
      const Vec3d r1 = unproject(cam, *v.forward);
      const Vec3d r2 = unproject(cam, *v.backward);
      CHECK((r1 + r2).norm() <= 1e-9);
    }
  }
}

TEST_CASE("line images") {
  const Camerad stereo = Camerad::normalized(Stereographic<double>{1.0});
  SUBCASE("stereographic images of lines are circles") {
    const auto pts = line_image_samples(stereo, Vec3d(0.4, 0.1, 0.8),
                                        Vec3d(1.0, 0.2, -0.3), 60);
    CHECK(pts.size() == 60);
    CHECK(circle_residual_rel(pts) <= 1e-9);
  }
  SUBCASE("meridian lines stay straight") {
    const auto pts = line_image_samples(stereo, Vec3d(0.5, 0.0, 0.7),
                                        Vec3d(1.0, 0.0, -0.2), 40);
    for (const auto& p : pts) CHECK(std::abs(p.y()) <= 1e-12);
  }
  SUBCASE("equidistant line images are approximately conic") {
    const Camerad equi = Camerad::normalized(Equidistant<double>{1.0});
    const auto pts = line_image_samples(equi, Vec3d(0.4, 0.1, 0.8),
                                        Vec3d(1.0, 0.2, -0.3), 60);
    double r_img = 0;
    for (const auto& p : pts) r_img = std::max(r_img, p.norm());
    CHECK(conic_residual(pts) <= 1e-2 * r_img);
    CHECK(conic_residual(pts) > 0.0);
  }
  SUBCASE("line through the camera center is degenerate") {
    CHECK_THROWS_AS((void)line_image_samples(stereo, Vec3d(2, 0.4, -0.6),
                                             Vec3d(1, 0.2, -0.3), 10),
                    DegenerateInput);
  }
  SUBCASE("pinhole line behind the camera") {
    const Camerad pin = Camerad::normalized(Pinhole<double>{1.0});
    CHECK_THROWS_AS((void)line_image_samples(pin, Vec3d(0, 0, -2),
                                             Vec3d(0, 1, 0), 10),
                    DomainError);
  }
  SUBCASE("endpoints approach the vanishing points") {
    const Vec3d dir = Vec3d(1.0, 0.2, -0.3).normalized();
    const auto pts =
        line_image_samples(stereo, Vec3d(0.4, 0.1, 0.8), dir, 200);
    const auto vp = vanishing_points(stereo, dir);
    REQUIRE(vp.forward.has_value());
    REQUIRE(vp.backward.has_value());
    CHECK((pts.front() - *vp.forward).norm() <= 1e-2);
    CHECK((pts.back() - *vp.backward).norm() <= 1e-2);
  }
}

TEST_CASE("horizon samples") {
  const Camerad equi = Camerad::normalized(Equidistant<double>{1.0});
  SUBCASE("ground-plane horizon is the radius pi/2 circle") {
    const auto pts = horizon_samples(equi, Vec3d(0, 0, 1), 32);
    CHECK(pts.size() == 32);
    for (const auto& p : pts)
      CHECK(p.norm() == doctest::Approx(kPi / 2).epsilon(1e-12));
  }
  SUBCASE("vertical-plane horizon includes the axis points") {
    const auto pts = horizon_samples(equi, Vec3d(0, 1, 0), 4);
    bool has_pos = false, has_neg = false;
    for (const auto& p : pts) {
      if ((p - Vec2d(kPi / 2, 0)).norm() < 1e-9) has_pos = true;
      if ((p - Vec2d(-kPi / 2, 0)).norm() < 1e-9) has_neg = true;
    }
    CHECK(has_pos);
    CHECK(has_neg);
  }
  SUBCASE("samples unproject orthogonally to the plane normal") {
    for (const Vec3d normal :
         {Vec3d(0, 0, 1), Vec3d(0, 1, 0), Vec3d(0.3, -0.5, 0.2)}) {
      const auto pts = horizon_samples(equi, normal, 16);
      for (const auto& p : pts)
        CHECK(std::abs(unproject(equi, p).dot(normal.normalized())) <= 1e-10);
    }
  }
  SUBCASE("no projectable horizon direction") {
    const Camerad pin = Camerad::normalized(Pinhole<double>{1.0});
    CHECK_THROWS_AS((void)horizon_samples(pin, Vec3d(0, 0, 1), 8),
                    DomainError);
  }
}
