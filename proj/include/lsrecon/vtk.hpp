#pragma once

#include "lsrecon/forest.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lsrecon {

struct CellField {
  std::string name;
  std::span<const double> values;
};

// Legacy ASCII unstructured grid, one pixel/voxel cell per leaf, with the
// leaf level plus the given fields as cell data.
template <int Dim>
void write_vtk(const std::string& path, const Forest<Dim>& forest,
               const std::vector<CellField>& fields);

}  // namespace lsrecon
