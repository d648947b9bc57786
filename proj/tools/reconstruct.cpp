// reconstruct <config.json> [overrides] -- run the multi-run reconstruction and
// write run_log.csv, per-run grids, the final surface and report.json.

#include "lsrecon/isosurface.hpp"
#include "lsrecon/pipeline.hpp"
#include "lsrecon/shapes.hpp"
#include "lsrecon/vtk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace lsrecon;
namespace fs = std::filesystem;

namespace {

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = config_from_json(j);
  // Relative input paths are taken from the config's directory.
  if (!c.input.empty() && fs::path(c.input).is_relative()) {
    const fs::path near = fs::path(path).parent_path() / c.input;
    if (fs::exists(near)) c.input = near.string();
  }
  return c;
}

template <int Dim>
int run(const RunConfig& config, const RawCloud& raw) {
  PointCloud<Dim> cloud = make_cloud<Dim>(raw);
  cloud.resolution = estimate_resolution(cloud, config.sample_fraction, config.seed);
  cloud.resolution_seed = config.seed;

  fs::create_directories(config.outdir);
  const fs::path out = config.outdir;

  Reconstructor<Dim> rec(config, cloud);
  if (!config.exact.empty()) {
    const auto sdf = shapes::exact_sdf<Dim>(config.exact);
    const auto tr = cloud.transform;
    rec.set_exact([sdf, tr](const Vec<Dim>& y) { return tr.scale * sdf(tr.to_original(y)); });
  }
  rec.set_observer([](const IterationRecord& r) {
    std::printf("r=%d n=%3d E2=%.6e dE=%.3e band=%zu ErrS=%.3e", r.run, r.iteration, r.e2, r.delta,
                r.band_size, r.err_s);
    if (r.err_1) std::printf(" Err1=%.3e", *r.err_1);
    std::printf(" %.0fms\n", r.wall_ms);
    std::fflush(stdout);
  });
  rec.set_run_hook([&](const RunSummary& s) {
    std::printf("run %d: level %d, %d iterations, %s\n", s.run, s.level, s.iterations,
                to_string(s.reason));
    if (!config.exports.vtk) return;
    const auto path = out / ("grid_r" + std::to_string(s.run) + "_final.vtk");
    write_vtk<Dim>(path.string(), rec.forest(), {{"phi", rec.phi()}, {"d", rec.distance()}});
  });

  const RunReport report = rec.run();
  write_run_log((out / "run_log.csv").string(), report);
  nlohmann::json j = to_json(report, config);

  const SampleGrid<Dim> grid = resample<Dim>(rec.forest(), rec.phi(), rec.op(), rec.gamma(), 2,
                                             config.workers);
  if constexpr (Dim == 2) {
    const Contour contour = marching_squares(grid);
    std::size_t closed = 0;
    for (char c : contour.closed) closed += c;
    j["surface"] = {{"lines", contour.lines.size()}, {"closed", closed}};
    if (config.exports.csv)
      write_contour_csv((out / "contour_final.csv").string(), contour, cloud.transform);
  } else {
    const Mesh mesh = marching_cubes(grid);
    const MeshCheck check = check_mesh(mesh);
    j["surface"] = {{"vertices", mesh.vertices.size()},
                    {"triangles", mesh.triangles.size()},
                    {"components", check.components},
                    {"boundary_edges", check.boundary_edges},
                    {"nonmanifold_edges", check.nonmanifold_edges},
                    {"watertight", check.watertight()}};
    if (config.exports.obj) write_obj((out / "surface_final.obj").string(), mesh, cloud.transform);
  }
  std::ofstream rep(out / "report.json");
  if (!rep) throw IoError("cannot write report.json");
  rep << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level set surface reconstruction from point clouds"};
  std::string config_path;
  std::optional<std::string> input, outdir, cavity, exports, exact;
  std::optional<int> runs, workers;
  std::optional<double> cs, half_width;
  std::optional<std::uint64_t> seed;
  app.add_option("config", config_path, "JSON configuration")->required();
  app.add_option("--input", input, "point cloud (.xyz or .ply)");
  app.add_option("--outdir", outdir, "output directory");
  app.add_option("--runs", runs, "number of runs R");
  app.add_option("--cs", cs, "resolution factor C_S");
  app.add_option("--domain-halfwidth", half_width, "domain half-width M");
  app.add_option("--cavity", cavity, "cavity mode")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--seed", seed, "random seed");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--export", exports, "comma list of vtk,csv,obj");
  app.add_option("--exact", exact, "exact shape for the L1 error")
      ->check(CLI::IsMember({"circle", "sphere", "square", "cube-spheres"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = load_config(config_path);
    nlohmann::json over = nlohmann::json::object();
    if (input) over["input"] = *input;
    if (outdir) over["outdir"] = *outdir;
    if (runs) over["runs"] = *runs;
    if (cs) over["cs"] = *cs;
    if (half_width) over["domain_halfwidth"] = *half_width;
    if (cavity) over["cavity_mode"] = *cavity == "on";
    if (seed) over["seed"] = *seed;
    if (workers) over["workers"] = *workers;
    if (exports) over["export"] = *exports;
    if (exact) over["exact"] = *exact;
    c = config_from_json(over, c);
    validate(c);
    if (c.input.empty()) throw ConfigError("no input cloud given");

    const CloudFormat fmt = c.format.empty() ? format_from_path(c.input)
                            : c.format == "ply" ? CloudFormat::Ply
                                                : CloudFormat::Xyz;
    const RawCloud raw = read_cloud(c.input, fmt);
    if (raw.dimension == 2) return run<2>(c, raw);
    if (raw.dimension == 3) return run<3>(c, raw);
    throw DegenerateInput("cloud must be 2D or 3D");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
