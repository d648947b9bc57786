#include "lsrecon/vtk.hpp"

#include <fstream>
#include <iomanip>

namespace lsrecon {

template <int Dim>
void write_vtk(const std::string& path, const Forest<Dim>& forest,
               const std::vector<CellField>& fields) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  constexpr int kCorners = 1 << Dim;
  const std::size_t n = forest.size();
  out << "# vtk DataFile Version 3.0\nforest\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n * kCorners << " double\n" << std::setprecision(12);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = forest.center(static_cast<LeafIndex>(i));
    const double h = 0.5 * forest.edge(static_cast<LeafIndex>(i));
    // VTK_PIXEL / VTK_VOXEL corner order is plain lexicographic (x fastest).
    for (int k = 0; k < kCorners; ++k) {
      for (int d = 0; d < 3; ++d) {
        const double v = d < Dim ? c[d] + (((k >> d) & 1) ? h : -h) : 0.0;
        out << v << (d == 2 ? '\n' : ' ');
      }
    }
  }
  out << "CELLS " << n << ' ' << n * (kCorners + 1) << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << kCorners;
    for (int k = 0; k < kCorners; ++k) out << ' ' << i * kCorners + k;
    out << '\n';
  }
  out << "CELL_TYPES " << n << '\n';
  for (std::size_t i = 0; i < n; ++i) out << (Dim == 2 ? 8 : 11) << '\n';
  out << "CELL_DATA " << n << "\nSCALARS level int 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) out << forest.level(static_cast<LeafIndex>(i)) << '\n';
  for (const auto& f : fields) {
    if (f.values.size() != n) throw ContractViolation("vtk field '" + f.name + "' size mismatch");
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f.values) out << v << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

template void write_vtk<2>(const std::string&, const Forest<2>&, const std::vector<CellField>&);
template void write_vtk<3>(const std::string&, const Forest<3>&, const std::vector<CellField>&);

}  // namespace lsrecon
