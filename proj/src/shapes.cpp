#include "lsrecon/shapes.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace lsrecon::shapes {

std::vector<Vec<2>> square_points(int per_side, double a) {
  if (per_side < 2) throw ConfigError("square needs at least 2 points per side");
  std::vector<Vec<2>> pts;
  const int steps = per_side - 1;
  const Vec<2> corners[4] = {{-a, -a}, {a, -a}, {a, a}, {-a, a}};
  for (int s = 0; s < 4; ++s) {
    const Vec<2> p = corners[s], q = corners[(s + 1) % 4];
    for (int i = 0; i < steps; ++i) pts.push_back(p + (q - p) * (static_cast<double>(i) / steps));
  }
  return pts;
}

double square_sdf(const Vec<2>& x, double a) {
  const Vec<2> q = (x.cwiseAbs().array() - a).matrix();
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

std::vector<Vec<2>> circle_points(int n, double radius, const Vec<2>& center) {
  std::vector<Vec<2>> pts(n);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pts[i] = center + radius * Vec<2>(std::cos(t), std::sin(t));
  }
  return pts;
}

double circle_sdf(const Vec<2>& x, double radius, const Vec<2>& center) {
  return (x - center).norm() - radius;
}

std::vector<Vec<3>> sphere_points(int n, double radius, const Vec<3>& center) {
  std::vector<Vec<3>> pts(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double t = golden * i;
    pts[i] = center + radius * Vec<3>(r * std::cos(t), r * std::sin(t), z);
  }
  return pts;
}

double sphere_sdf(const Vec<3>& x, double radius, const Vec<3>& center) {
  return (x - center).norm() - radius;
}

std::vector<Vec<2>> heart_points(int n) {
  std::vector<Vec<2>> pts(n);
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const double s = std::sin(t);
    pts[i] = Vec<2>(16.0 * s * s * s,
                    13.0 * std::cos(t) - 5.0 * std::cos(2 * t) - 2.0 * std::cos(3 * t) - std::cos(4 * t));
  }
  return pts;
}

std::vector<Vec<2>> tunnel_points(double gap, double half_length, double spacing,
                                  double thickness) {
  const int per_row = static_cast<int>(std::lround(2.0 * half_length / spacing)) + 1;
  std::vector<Vec<2>> pts;
  auto row = [&](double y) {
    for (int i = 0; i < per_row; ++i)
      pts.emplace_back(-half_length + 2.0 * half_length * i / (per_row - 1), y);
  };
  row(-0.5 * gap);
  row(0.5 * gap);
  if (thickness <= 0.0) return pts;
  const double outer = 0.5 * gap + thickness;
  row(-outer);
  row(outer);
  const int caps = std::max(1, static_cast<int>(std::lround(thickness / spacing)));
  for (double side : {-1.0, 1.0})
    for (double x : {-half_length, half_length})
      for (int i = 1; i < caps; ++i)
        pts.emplace_back(x, side * (0.5 * gap + thickness * i / caps));
  return pts;
}

CubeSpheres::CubeSpheres() {
  rotation_ = (Eigen::AngleAxisd(0.5, Eigen::Vector3d::UnitZ()) *
               Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY()) *
               Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()))
                  .toRotationMatrix();
  const double h = kHalfEdge;
  centers_ = {Vec<3>(0.0, h, h), Vec<3>(-h, -h, -h), Vec<3>(h, -h, -h)};
  radii_ = {0.25, 0.15, 0.15};
}

double CubeSpheres::box_sdf(const Vec<3>& y) const {
  const Vec<3> q = (y.cwiseAbs().array() - kHalfEdge).matrix();
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

double CubeSpheres::ball_sdf(const Vec<3>& y, int k) const {
  return (y - centers_[k]).norm() - radii_[k];
}

bool CubeSpheres::covered(const Vec<3>& y, int exclude) const {
  constexpr double kTol = -1e-9;
  if (exclude != -1 && box_sdf(y) < kTol) return true;
  for (int k = 0; k < static_cast<int>(radii_.size()); ++k)
    if (k != exclude && ball_sdf(y, k) < kTol) return true;
  return false;
}

// Nearest uncovered point of the union's boundary from an interior point: the
// minimiser lies on a face, an edge, a sphere, a crease circle or an edge-sphere crossing.
double CubeSpheres::inside_distance(const Vec<3>& y) const {
  const double h = kHalfEdge;
  double best = kInf;
  auto consider = [&](const Vec<3>& p) {
    if (covered(p, -2)) return;
    best = std::min(best, (y - p).norm());
  };
  const int balls = static_cast<int>(radii_.size());

  for (int a = 0; a < 3; ++a) {
    for (double s : {-h, h}) {
      Vec<3> p = y.cwiseMax(-h).cwiseMin(h);
      p[a] = s;
      consider(p);
      for (int k = 0; k < balls; ++k) {
        const double off = centers_[k][a] - s;
        if (std::abs(off) >= radii_[k]) continue;
        const double rho = std::sqrt(radii_[k] * radii_[k] - off * off);
        Vec<3> cc = centers_[k];
        cc[a] = s;
        Vec<3> q = y;
        q[a] = s;
        const Vec<3> dir = q - cc;
        if (dir.norm() == 0.0) continue;
        const Vec<3> p2 = cc + rho * dir.normalized();
        if (p2.cwiseAbs().maxCoeff() <= h + 1e-12) consider(p2);
      }
    }
  }
  // Edges: axis a free, the other two fixed at +-h.
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    for (double sb : {-h, h}) {
      for (double sc : {-h, h}) {
        Vec<3> p;
        p[a] = std::clamp(y[a], -h, h);
        p[b] = sb;
        p[c] = sc;
        consider(p);
        for (int k = 0; k < balls; ++k) {
          Vec<3> base = p;
          base[a] = 0.0;
          const Vec<3> w = base - centers_[k];
          // |base + t e_a - c|^2 = r^2
          const double bq = w[a];
          const double cq = w.squaredNorm() - radii_[k] * radii_[k];
          const double disc = bq * bq - cq;
          if (disc < 0.0) continue;
          for (double t : {-bq - std::sqrt(disc), -bq + std::sqrt(disc)}) {
            if (std::abs(t) > h) continue;
            Vec<3> e = base;
            e[a] = t;
            consider(e);
          }
        }
      }
    }
  }
  for (int k = 0; k < balls; ++k) {
    const Vec<3> dir = y - centers_[k];
    const Vec<3> u = dir.norm() > 0.0 ? Vec<3>(dir.normalized()) : Vec<3>(Vec<3>::UnitX());
    consider(centers_[k] + radii_[k] * u);
  }
  return best;
}

double CubeSpheres::body_sdf(const Vec<3>& y) const {
  double outside = box_sdf(y);
  for (int k = 0; k < static_cast<int>(radii_.size()); ++k) outside = std::min(outside, ball_sdf(y, k));
  if (outside >= 0.0) return outside;
  return -inside_distance(y);
}

double CubeSpheres::sdf(const Vec<3>& x) const { return body_sdf(rotation_.transpose() * x); }

std::vector<Vec<3>> CubeSpheres::body_pool(int count, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double h = kHalfEdge;
  std::vector<double> area = {6.0 * 4.0 * h * h};
  for (double r : radii_) area.push_back(4.0 * std::numbers::pi * r * r);
  std::discrete_distribution<int> pick(area.begin(), area.end());

  std::vector<Vec<3>> cand;
  cand.reserve(count);
  while (static_cast<int>(cand.size()) < count) {
    const int part = pick(rng);
    Vec<3> y;
    int own;
    if (part == 0) {
      const int face = static_cast<int>(uni(rng) * 6.0) % 6;
      for (int d = 0; d < 3; ++d) y[d] = (2.0 * uni(rng) - 1.0) * h;
      y[face / 2] = face % 2 ? h : -h;
      own = -1;
    } else {
      Vec<3> g(gauss(rng), gauss(rng), gauss(rng));
      if (g.norm() == 0.0) continue;
      own = part - 1;
      y = centers_[own] + radii_[own] * g.normalized();
    }
    if (covered(y, own)) continue;
    cand.push_back(y);
  }
  return cand;
}

std::vector<Vec<3>> CubeSpheres::surface_pool(int count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  auto pts = body_pool(count, rng);
  for (auto& p : pts) p = rotation_ * p;
  return pts;
}

std::vector<Vec<3>> CubeSpheres::sample(int n, std::uint64_t seed, int pool) const {
  if (pool == 0) pool = 2 * n;
  if (n < 1 || pool < n) throw ConfigError("sample needs 1 <= n <= pool");
  std::mt19937_64 rng(seed);
  const std::vector<Vec<3>> cand = body_pool(pool, rng);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<Vec<3>> out;
  out.reserve(n);
  std::vector<double> gap(cand.size(), kInf);
  std::size_t next = static_cast<std::size_t>(uni(rng) * cand.size()) % cand.size();
  for (int i = 0; i < n; ++i) {
    out.push_back(cand[next]);
    const Vec<3> p = cand[next];
    std::size_t far = 0;
    double far_gap = -1.0;
    for (std::size_t t = 0; t < cand.size(); ++t) {
      gap[t] = std::min(gap[t], (cand[t] - p).squaredNorm());
      if (gap[t] > far_gap) {
        far_gap = gap[t];
        far = t;
      }
    }
    next = far;
  }
  for (auto& p : out) p = rotation_ * p;
  return out;
}

template <>
std::function<double(const Vec<2>&)> exact_sdf<2>(const std::string& name) {
  if (name == "circle") return [](const Vec<2>& x) { return circle_sdf(x); };
  if (name == "square") return [](const Vec<2>& x) { return square_sdf(x); };
  throw ConfigError("no exact 2D shape named '" + name + "'");
}

template <>
std::function<double(const Vec<3>&)> exact_sdf<3>(const std::string& name) {
  if (name == "sphere") return [](const Vec<3>& x) { return sphere_sdf(x); };
  if (name == "cube-spheres") {
    auto shape = std::make_shared<CubeSpheres>();
    return [shape](const Vec<3>& x) { return shape->sdf(x); };
  }
  throw ConfigError("no exact 3D shape named '" + name + "'");
}

}  // namespace lsrecon::shapes
