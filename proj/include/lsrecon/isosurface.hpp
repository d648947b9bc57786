#pragma once

// Zero level set extraction on a uniform resampling of the forest field.

#include "lsrecon/forest.hpp"
#include "lsrecon/point_cloud.hpp"
#include "lsrecon/recon.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace lsrecon {

// Nodes at the finest-level cell centres covering the band's bounding box.
template <int Dim>
struct SampleGrid {
  Vec<Dim> origin = Vec<Dim>::Zero();
  double h = 0.0;
  std::array<int, Dim> n{};
  std::vector<double> value;

  Vec<Dim> node(const std::array<int, Dim>& i) const {
    Vec<Dim> x = origin;
    for (int d = 0; d < Dim; ++d) x[d] += h * i[d];
    return x;
  }
  std::size_t id(const std::array<int, Dim>& i) const {
    std::size_t k = 0;
    for (int d = Dim - 1; d >= 0; --d) k = k * n[d] + i[d];
    return k;
  }
};

// Leaves with |phi| < gamma use their reconstruction, others their value.
template <int Dim>
SampleGrid<Dim> resample(const Forest<Dim>& forest, std::span<const double> phi,
                         Reconstruction op, double gamma, int margin = 2, int workers = 1);

struct Contour {
  std::vector<std::vector<Vec<2>>> lines;
  std::vector<char> closed;
};

// Marching squares; saddles are resolved by the cell-centre average.
Contour marching_squares(const SampleGrid<2>& grid);

struct Mesh {
  std::vector<Vec<3>> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Marching cubes with vertices welded per grid edge.
Mesh marching_cubes(const SampleGrid<3>& grid);

struct MeshCheck {
  std::size_t edges = 0;
  std::size_t boundary_edges = 0;     // used by one triangle
  std::size_t nonmanifold_edges = 0;  // used by more than two
  std::size_t components = 0;
  bool watertight() const { return edges > 0 && boundary_edges == 0 && nonmanifold_edges == 0; }
};

MeshCheck check_mesh(const Mesh& mesh);

void write_obj(const std::string& path, const Mesh& mesh, const CloudTransform<3>& transform);
// Columns x,y; lines separated by a blank row.
void write_contour_csv(const std::string& path, const Contour& contour,
                       const CloudTransform<2>& transform);

}  // namespace lsrecon
