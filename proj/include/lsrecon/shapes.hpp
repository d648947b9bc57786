#pragma once

// Synthetic clouds with known signed distance functions (negative inside).

#include "lsrecon/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace lsrecon::shapes {

// Boundary of the square [-a, a]^2 with `per_side` points per side (corners shared).
std::vector<Vec<2>> square_points(int per_side = 7, double a = 1.0);
double square_sdf(const Vec<2>& x, double a = 1.0);

std::vector<Vec<2>> circle_points(int n, double radius = 1.0, const Vec<2>& center = Vec<2>::Zero());
double circle_sdf(const Vec<2>& x, double radius = 1.0, const Vec<2>& center = Vec<2>::Zero());

// Fibonacci lattice on the sphere.
std::vector<Vec<3>> sphere_points(int n, double radius = 1.0, const Vec<3>& center = Vec<3>::Zero());
double sphere_sdf(const Vec<3>& x, double radius = 1.0, const Vec<3>& center = Vec<3>::Zero());

// x = 16 sin^3 t, y = 13 cos t - 5 cos 2t - 2 cos 3t - cos 4t at equal parameter steps.
std::vector<Vec<2>> heart_points(int n = 24);

// Two rows y = +-gap/2 over x in [-half_length, half_length] (listed first).  With
// thickness > 0 each row is the inner face of a solid wall whose other sides are
// sampled at the same spacing.
std::vector<Vec<2>> tunnel_points(double gap = 0.36, double half_length = 1.0, double spacing = 0.04,
                                  double thickness = 0.0);

// Cube of edge 0.8 joined with a sphere (r = 0.25) centred at the midpoint of one
// edge and two spheres (r = 0.15) centred at the vertices of the opposite edge,
// rotated off the axes.
class CubeSpheres {
 public:
  CubeSpheres();

  double sdf(const Vec<3>& x) const;
  bool inside(const Vec<3>& x) const { return sdf(x) < 0.0; }
  // Uniform surface pool thinned by farthest-point selection to `n` points; the
  // pool defaults to 2n, which gives blue-noise spacing with mean gap ~0.044 at n = 2346
  // after rescaling.
  std::vector<Vec<3>> sample(int n = 2346, std::uint64_t seed = 1, int pool = 0) const;

  // Uniform random points on the union's boundary (rotated).
  std::vector<Vec<3>> surface_pool(int count, std::uint64_t seed) const;

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  static constexpr double kHalfEdge = 0.4;

 private:
  double body_sdf(const Vec<3>& y) const;
  double box_sdf(const Vec<3>& y) const;
  double ball_sdf(const Vec<3>& y, int k) const;
  bool covered(const Vec<3>& y, int exclude) const;
  std::vector<Vec<3>> body_pool(int count, std::mt19937_64& rng) const;
  double inside_distance(const Vec<3>& y) const;

  Eigen::Matrix3d rotation_;
  std::vector<Vec<3>> centers_;
  std::vector<double> radii_;
};

// Exact signed distance in original coordinates for a named shape:
// "circle" (unit), "sphere" (unit), "square" ([-1,1]^2), "cube-spheres".
template <int Dim>
std::function<double(const Vec<Dim>&)> exact_sdf(const std::string& name);

}  // namespace lsrecon::shapes
