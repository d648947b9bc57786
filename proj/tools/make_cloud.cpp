// make_cloud <shape> <out.xyz> -- write one of the synthetic clouds.

#include "lsrecon/shapes.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>

using namespace lsrecon;

namespace {

template <int Dim>
int write(const std::string& path, const std::vector<Vec<Dim>>& pts) {
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", path.c_str());
    return 4;
  }
  out << std::setprecision(17);
  for (const auto& p : pts) {
    for (int d = 0; d < Dim; ++d) out << (d ? " " : "") << p[d];
    out << '\n';
  }
  std::printf("%zu points -> %s\n", pts.size(), path.c_str());
  return out ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic point clouds"};
  std::string shape, path;
  int n = 0;
  std::uint64_t seed = 1;
  double gap = 0.36, spacing = 0.04, thickness = 0.3;
  app.add_option("shape", shape, "square|circle|sphere|heart|tunnel|cube-spheres")
      ->required()
      ->check(CLI::IsMember({"square", "circle", "sphere", "heart", "tunnel", "cube-spheres"}));
  app.add_option("out", path, "output .xyz")->required();
  app.add_option("-n", n, "number of points (shape default when 0)");
  app.add_option("--seed", seed, "sampling seed (cube-spheres)");
  app.add_option("--gap", gap, "tunnel gap");
  app.add_option("--spacing", spacing, "tunnel point spacing");
  app.add_option("--thickness", thickness, "tunnel wall thickness (0: bare rows)");
  CLI11_PARSE(app, argc, argv);

  if (shape == "square") return write<2>(path, shapes::square_points(n ? n : 7));
  if (shape == "circle") return write<2>(path, shapes::circle_points(n ? n : 64));
  if (shape == "heart") return write<2>(path, shapes::heart_points(n ? n : 24));
  if (shape == "tunnel") return write<2>(path, shapes::tunnel_points(gap, 1.0, spacing, thickness));
  if (shape == "sphere") return write<3>(path, shapes::sphere_points(n ? n : 2000));
  return write<3>(path, shapes::CubeSpheres().sample(n ? n : 2346, seed));
}
