#include <doctest.h>

#include "lsrecon/point_cloud.hpp"
#include "lsrecon/shapes.hpp"

#include <cmath>
#include <random>

using namespace lsrecon;

TEST_CASE("square cloud") {
  const auto pts = shapes::square_points();
  CHECK(pts.size() == 24);
  for (const auto& p : pts) CHECK(std::abs(shapes::square_sdf(p)) < 1e-15);
  CHECK(shapes::square_sdf(Vec<2>(0.0, 0.0)) == doctest::Approx(-1.0));
  CHECK(shapes::square_sdf(Vec<2>(0.5, 0.9)) == doctest::Approx(-0.1));
  CHECK(shapes::square_sdf(Vec<2>(2.0, 2.0)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(shapes::square_sdf(Vec<2>(1.5, 0.3)) == doctest::Approx(0.5));
}

TEST_CASE("sphere and heart clouds") {
  const auto s = shapes::sphere_points(500, 0.8);
  CHECK(s.size() == 500);
  for (const auto& p : s) CHECK(p.norm() == doctest::Approx(0.8));
  CHECK(shapes::heart_points().size() == 24);
  const auto t = shapes::tunnel_points(0.36, 1.0, 0.04);
  CHECK(t.size() == 102);
  CHECK(t.front()[0] == doctest::Approx(-1.0));
  CHECK(t.back()[1] == doctest::Approx(0.18));
}

TEST_CASE("cube and spheres distance function") {
  const shapes::CubeSpheres shape;
  const Eigen::Matrix3d R = shape.rotation();
  CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-14);
  // No face normal is close to a coordinate axis.
  for (int a = 0; a < 3; ++a) CHECK(R.col(a).cwiseAbs().maxCoeff() < 0.99);

  const auto pool = shape.surface_pool(150000, 7);
  for (std::size_t i = 0; i < pool.size(); i += 97) CHECK(std::abs(shape.sdf(pool[i])) < 1e-9);

  // Independent oracle: the body frame membership test and the nearest of a
  // dense boundary sample.
  const double h = 0.4;
  const Vec<3> centers[3] = {{0.0, h, h}, {-h, -h, -h}, {h, -h, -h}};
  const double radii[3] = {0.25, 0.15, 0.15};
  auto member = [&](const Vec<3>& x) {
    const Vec<3> y = R.transpose() * x;
    if (y.cwiseAbs().maxCoeff() < h) return true;
    for (int k = 0; k < 3; ++k)
      if ((y - centers[k]).norm() < radii[k]) return true;
    return false;
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  int inside = 0;
  for (int t = 0; t < 400; ++t) {
    const Vec<3> x(u(rng), u(rng), u(rng));
    const double s = shape.sdf(x);
    double brute = kInf;
    for (const auto& q : pool) brute = std::min(brute, (x - q).norm());
    CHECK((s < 0.0) == member(x));
    inside += s < 0.0;
    CHECK(std::abs(s) <= brute + 1e-9);
    CHECK(brute - std::abs(s) < 0.012);
  }
  CHECK(inside > 20);

  const auto cloud = shape.sample(2346, 1);
  CHECK(cloud.size() == 2346);
  for (const auto& p : cloud) CHECK(std::abs(shape.sdf(p)) < 1e-9);
  const auto scaled = make_cloud<3>(std::span<const Vec<3>>(cloud));
  const double hs = estimate_resolution(scaled, 1.0, 0);
  CHECK(hs > 0.035);
  CHECK(hs < 0.055);
}
